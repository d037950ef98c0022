//! Acceptance criterion on the hardness transition: sweeping the number
//! of descriptors at a fixed variable count, the exact engine's median
//! runtime peaks where the two are within an order of magnitude of each
//! other and falls off on both sides. This test lives in its own binary
//! so no concurrent test disturbs the timings.

use wscond::bench::{run_benchmark, BenchConfig, Status};
use wscond::budget::Caps;

#[test]
fn acceptance_10_easy_hard_easy_trend() {
    let started = std::time::Instant::now();
    let cfg = BenchConfig::parse(
        "n = 100\n\
         r = 2\n\
         s = 2\n\
         w = 50, 100, 300, 1000, 3000, 10000\n\
         algorithms = indve\n\
         heuristics = minlog\n\
         reps = 5\n\
         timeout_s = 600\n\
         seed = 20240817\n",
    )
    .unwrap();
    let rows = run_benchmark(&cfg, &Caps::default()).unwrap();
    assert!(
        started.elapsed().as_secs() < 30 * 60,
        "sweep must fit the 30 minute harness budget"
    );

    let median_ms = |w: u64| -> f64 {
        let mut times: Vec<f64> = rows
            .iter()
            .filter(|r| r.w == w)
            .map(|r| {
                assert!(
                    matches!(r.status, Status::Ok | Status::Timeout),
                    "unexpected status {:?} at w={w}",
                    r.status
                );
                r.time_ms
            })
            .collect();
        assert_eq!(times.len(), 5);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times[2]
    };

    let low = median_ms(50);
    let hard = [median_ms(100), median_ms(300), median_ms(1000)];
    let high = [median_ms(3000), median_ms(10000)];
    let peak = hard.iter().cloned().fold(0.0, f64::max);

    println!("median ms by descriptor count:");
    for (w, t) in [50u64, 100, 300, 1000, 3000, 10000]
        .iter()
        .zip([low, hard[0], hard[1], hard[2], high[0], high[1]])
    {
        println!("  w={w:>6} -> {t:.3} ms");
    }
    assert!(
        low < peak,
        "fewer descriptors than variables must be easier than the peak ({low} vs {peak})"
    );
    for t in high {
        assert!(
            t < peak,
            "an order of magnitude more descriptors than variables must be easier than the peak ({t} vs {peak})"
        );
    }
    println!(
        "ACCEPTANCE 10 PASS — hardness peaks between w=n and w=10n (peak {peak:.3} ms, sides {low:.3}/{:.3}/{:.3} ms)",
        high[0], high[1]
    );
}
