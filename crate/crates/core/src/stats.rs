//! Process-wide execution counter for the numerical kernels.

use std::sync::atomic::{AtomicU64, Ordering};

static KERNEL_EVALUATIONS: AtomicU64 = AtomicU64::new(0);

#[inline]
pub(crate) fn record_kernel_evaluations(n: u64) {
    KERNEL_EVALUATIONS.fetch_add(n, Ordering::Relaxed);
}

/// Number of per-point direction iterations run since process start.
pub fn kernel_evaluations() -> u64 {
    KERNEL_EVALUATIONS.load(Ordering::Relaxed)
}
