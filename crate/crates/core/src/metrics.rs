//! Instrumented operation counters.
//!
//! The cost model of this library is stated in operation counts, not wall
//! time: curve evaluations, interpolations (inverse-matrix applications),
//! bounding-box comparisons, exact segment tests and force-field samples.
//! Counters are thread-local so concurrent tests do not interfere; the
//! evolution loop itself is single-threaded per contour.

use std::cell::Cell;
use std::ops::Sub;

/// Snapshot of the per-thread operation counters.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    /// De Casteljau curve-point evaluations.
    pub curve_evals: u64,
    /// Hodograph (derivative) evaluations.
    pub derivative_evals: u64,
    /// Applications of the inverse interpolation matrix (interpolate/deform).
    pub interpolations: u64,
    /// Lexicographic bounding-box comparisons (sorting, sweeping).
    pub box_comparisons: u64,
    /// Exact segment-pair intersection tests.
    pub segment_tests: u64,
    /// Force-field displacement queries.
    pub force_samples: u64,
}

impl OpCounts {
    /// Sum over all counter kinds; the "work unit" used by scaling probes.
    pub fn total(&self) -> u64 {
        self.curve_evals
            + self.derivative_evals
            + self.interpolations
            + self.box_comparisons
            + self.segment_tests
            + self.force_samples
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            curve_evals: self.curve_evals - rhs.curve_evals,
            derivative_evals: self.derivative_evals - rhs.derivative_evals,
            interpolations: self.interpolations - rhs.interpolations,
            box_comparisons: self.box_comparisons - rhs.box_comparisons,
            segment_tests: self.segment_tests - rhs.segment_tests,
            force_samples: self.force_samples - rhs.force_samples,
        }
    }
}

thread_local! {
    static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts {
        curve_evals: 0,
        derivative_evals: 0,
        interpolations: 0,
        box_comparisons: 0,
        segment_tests: 0,
        force_samples: 0,
    }) };
}

/// Reset all counters on the current thread to zero.
pub fn reset() {
    COUNTS.with(|c| c.set(OpCounts::default()));
}

/// Read the current thread's counters.
pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| c.get())
}

macro_rules! bump {
    ($name:ident, $field:ident) => {
        pub(crate) fn $name(n: u64) {
            COUNTS.with(|c| {
                let mut v = c.get();
                v.$field += n;
                c.set(v);
            });
        }
    };
}

bump!(count_curve_eval, curve_evals);
bump!(count_derivative_eval, derivative_evals);
bump!(count_interpolation, interpolations);
bump!(count_box_comparison, box_comparisons);
bump!(count_segment_test, segment_tests);
bump!(count_force_sample, force_samples);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_accumulate_and_reset() {
        reset();
        count_curve_eval(3);
        count_interpolation(2);
        let s = snapshot();
        assert_eq!(s.curve_evals, 3);
        assert_eq!(s.interpolations, 2);
        assert_eq!(s.total(), 5);
        reset();
        assert_eq!(snapshot(), OpCounts::default());
    }
}
