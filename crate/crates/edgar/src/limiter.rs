//! Sliding-window request throttling.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Source of monotonic time. Injectable so throttling and backoff can be
/// tested without real sleeps.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// A clock that only moves when slept on.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

/// Proof of an acquired request slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Permit {
    pub issued_at: Duration,
}

const WINDOW: Duration = Duration::from_secs(1);

/// At most `max_per_second` permits in any 1-second window.
#[derive(Debug)]
pub struct RateLimiter {
    max_per_second: usize,
    issued: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn new(max_per_second: usize) -> Self {
        assert!(max_per_second > 0, "rate limit must be positive");
        RateLimiter { max_per_second, issued: Mutex::new(VecDeque::new()) }
    }

    pub fn max_per_second(&self) -> usize {
        self.max_per_second
    }

    /// Block until a permit is available.
    pub fn acquire(&self, clock: &dyn Clock) -> Permit {
        let mut issued = self.issued.lock().unwrap();
        loop {
            let now = clock.now();
            while issued.front().is_some_and(|t| now >= *t + WINDOW) {
                issued.pop_front();
            }
            if issued.len() < self.max_per_second {
                issued.push_back(now);
                return Permit { issued_at: now };
            }
            let wait = *issued.front().expect("window is full") + WINDOW - now;
            clock.sleep(wait);
        }
    }
}

/// Largest number of permits issued in any half-open window of one second.
pub fn max_in_window(times: &[Duration]) -> usize {
    let mut sorted = times.to_vec();
    sorted.sort();
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..sorted.len() {
        while sorted[hi] >= sorted[lo] + WINDOW {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}
