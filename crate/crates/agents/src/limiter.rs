//! Per-agent request rate limiting.

use std::collections::VecDeque;
use std::time::Duration;

use tokio::sync::Mutex;
use tokio::time::{sleep_until, Instant};

/// Admits at most `limit` requests in any window of length `window`
/// (a sliding log of admission times).
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    admitted: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(limit: u32, window: Duration) -> Self {
        assert!(limit > 0, "rate limit must be positive");
        RateLimiter { limit: limit as usize, window, admitted: Mutex::new(VecDeque::with_capacity(limit as usize)) }
    }

    pub fn per_minute(limit: u32) -> Self {
        Self::new(limit, Duration::from_secs(60))
    }

    /// Waits until a request may be sent and records it.
    pub async fn acquire(&self) {
        loop {
            let wait_until = {
                let mut log = self.admitted.lock().await;
                let now = Instant::now();
                while log.front().is_some_and(|&t| now.duration_since(t) >= self.window) {
                    log.pop_front();
                }
                if log.len() < self.limit {
                    log.push_back(now);
                    return;
                }
                log[0] + self.window
            };
            sleep_until(wait_until).await;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[tokio::test(start_paused = true)]
    async fn never_exceeds_limit_in_any_window() {
        let limiter = Arc::new(RateLimiter::new(5, Duration::from_secs(60)));
        let start = Instant::now();
        let mut tasks = Vec::new();
        for _ in 0..17 {
            let l = limiter.clone();
            tasks.push(tokio::spawn(async move {
                l.acquire().await;
                Instant::now()
            }));
        }
        let mut times = Vec::new();
        for t in tasks {
            times.push(t.await.unwrap().duration_since(start));
        }
        times.sort();
        for (i, &t) in times.iter().enumerate() {
            let in_window = times[i..].iter().take_while(|&&u| u < t + Duration::from_secs(60)).count();
            assert!(in_window <= 5, "{times:?}");
        }
        assert_eq!(times[16], Duration::from_secs(180));
    }
}
