use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by all workers querying one backend.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<Bucket>,
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    refilled: Instant,
}

impl RateLimiter {
    /// `per_minute` requests on average, bursting up to `per_minute / 60`
    /// (at least one) at once.
    pub fn per_minute(per_minute: u32) -> Self {
        let per_second = per_minute.max(1) as f64 / 60.0;
        let capacity = per_second.max(1.0);
        Self {
            per_second,
            capacity,
            state: Mutex::new(Bucket {
                tokens: capacity,
                refilled: Instant::now(),
            }),
        }
    }

    /// Blocks until a token is available, then takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut bucket = self.state.lock().expect("rate limiter poisoned");
                let now = Instant::now();
                let elapsed = now.duration_since(bucket.refilled).as_secs_f64();
                bucket.tokens = (bucket.tokens + elapsed * self.per_second).min(self.capacity);
                bucket.refilled = now;
                if bucket.tokens >= 1.0 {
                    bucket.tokens -= 1.0;
                    return;
                }
                (1.0 - bucket.tokens) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burst_then_throttle() {
        // 600/min = 10/s, burst of 10.
        let limiter = RateLimiter::per_minute(600);
        let start = Instant::now();
        for _ in 0..10 {
            limiter.acquire();
        }
        assert!(start.elapsed() < Duration::from_millis(50));
        limiter.acquire();
        limiter.acquire();
        assert!(start.elapsed() >= Duration::from_millis(150));
    }
}
