//! Resource caps and per-call budgets.
//!
//! Worst cases of the decomposition and difference algorithms are
//! exponential, so every potentially explosive loop charges against a
//! [`Budget`] and aborts with a structured error instead of exhausting
//! memory or running forever.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Global resource limits. The environment variable `WSCOND_CAP` overrides
/// every cap at once (the CLI reads it; library callers pass caps
/// explicitly).
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Maximum size of the working set while computing ws-set differences.
    pub diff_working_set: u64,
    /// Maximum number of visited subproblems during decomposition,
    /// conditioning and ws-descriptor elimination.
    pub decompose_nodes: u64,
    /// Maximum number of worlds that enumeration-based operations may visit.
    pub enumerate_worlds: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            diff_working_set: 10_000_000,
            decompose_nodes: 100_000_000,
            enumerate_worlds: 1 << 24,
        }
    }
}

impl Caps {
    /// Default caps, with `WSCOND_CAP` (a single integer) overriding all of
    /// them when set.
    pub fn from_env() -> Caps {
        let mut caps = Caps::default();
        if let Ok(raw) = std::env::var("WSCOND_CAP") {
            if let Ok(v) = raw.trim().parse::<u64>() {
                caps.diff_working_set = v;
                caps.decompose_nodes = v;
                caps.enumerate_worlds = v;
            }
        }
        caps
    }
}

/// Tracks subproblem count and an optional deadline for one engine call.
#[derive(Debug, Clone)]
pub struct Budget {
    node_cap: u64,
    nodes: u64,
    started: Instant,
    deadline: Option<Instant>,
}

impl Budget {
    pub fn new(node_cap: u64) -> Budget {
        Budget {
            node_cap,
            nodes: 0,
            started: Instant::now(),
            deadline: None,
        }
    }

    pub fn from_caps(caps: &Caps) -> Budget {
        Budget::new(caps.decompose_nodes)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Budget {
        self.deadline = Some(self.started + timeout);
        self
    }

    /// Charge one visited subproblem. The deadline is only polled every
    /// 1024 charges; individual subproblems are cheap.
    #[inline]
    pub fn charge(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::ResourceExhausted {
                what: "visited subproblems",
                cap: self.node_cap,
            });
        }
        // poll on the first charge so even tiny runs notice a deadline
        if self.nodes & 1023 == 1 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout {
                        elapsed_ms: self.started.elapsed().as_millis() as u64,
                    });
                }
            }
        }
        Ok(())
    }

    /// Number of subproblems charged so far.
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_cap_trips() {
        let mut b = Budget::new(10);
        for _ in 0..10 {
            b.charge().unwrap();
        }
        match b.charge() {
            Err(Error::ResourceExhausted { cap: 10, .. }) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn deadline_trips() {
        let mut b = Budget::new(u64::MAX).with_timeout(Duration::from_millis(0));
        let mut tripped = false;
        for _ in 0..10_000 {
            if b.charge().is_err() {
                tripped = true;
                break;
            }
        }
        assert!(tripped);
    }
}
