//! The adaptive restart rule.
//!
//! Both algorithms share one trigger, applied to different progress
//! metrics: the averaged algorithm watches the KKT triple norm of its
//! running average, the reflected Halpern algorithm watches the ω-norm
//! fixed-point residual ‖PDHG(z) − z‖.

/// Sufficient-decay factor: restart outright below this fraction of the
/// epoch's starting metric.
const SUFFICIENT_DECAY: f64 = 0.2;
/// Necessary-decay factor: restart below this fraction only if progress
/// has stalled since the previous check.
const NECESSARY_DECAY: f64 = 0.8;
/// Artificial restart once an epoch exceeds this fraction of all steps.
const ARTIFICIAL_FRACTION: f64 = 0.36;

/// Decides whether to restart the current epoch.
///
/// Restart iff the metric decayed sufficiently, or decayed necessarily and
/// then rose since the last check, or the epoch grew past 36% of the total
/// step count.
pub fn should_restart(
    current_metric: f64,
    metric_at_restart_start: f64,
    metric_at_last_check: f64,
    steps_since_restart: u64,
    total_steps: u64,
) -> bool {
    let sufficient = current_metric <= SUFFICIENT_DECAY * metric_at_restart_start;
    let stalled = current_metric <= NECESSARY_DECAY * metric_at_restart_start
        && current_metric > metric_at_last_check;
    let artificial = steps_since_restart as f64 >= ARTIFICIAL_FRACTION * total_steps as f64;
    sufficient || stalled || artificial
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sufficient_decay_restarts() {
        assert!(should_restart(0.1, 1.0, 0.05, 10, 1000));
    }

    #[test]
    fn necessary_decay_with_stall_restarts() {
        // 0.7 ≤ 0.8·1.0 and the metric rose since the last check.
        assert!(should_restart(0.7, 1.0, 0.6, 10, 1000));
    }

    #[test]
    fn falling_metric_without_enough_decay_does_not_restart() {
        assert!(!should_restart(0.9, 1.0, 0.95, 10, 1000));
    }

    #[test]
    fn necessary_decay_still_falling_does_not_restart() {
        assert!(!should_restart(0.5, 1.0, 0.6, 10, 1000));
    }

    #[test]
    fn long_epoch_forces_artificial_restart() {
        assert!(should_restart(0.99, 1.0, 0.98, 360, 1000));
        assert!(!should_restart(0.99, 1.0, 0.98, 359, 1000));
    }
}
