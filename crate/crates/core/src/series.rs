//! Truncation bookkeeping: every evaluated infinite series carries a
//! certified bound on its discarded tail.

/// How a series is cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncMode {
    /// Sum exactly `k_max + 1` terms (k = 0..=k_max) and report the tail.
    FixedK,
    /// Sum until the certified tail bound drops below `tail_tol`.
    TailTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub mode: TruncMode,
    /// Hard cap on the series index in either mode.
    pub k_max: usize,
    pub tail_tol: f64,
}

impl TruncationPolicy {
    pub fn tail_target(tol: f64) -> Self {
        TruncationPolicy {
            mode: TruncMode::TailTarget,
            k_max: 600,
            tail_tol: tol,
        }
    }

    pub fn fixed_k(k_max: usize) -> Self {
        TruncationPolicy {
            mode: TruncMode::FixedK,
            k_max,
            tail_tol: 0.0,
        }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::tail_target(1e-12)
    }
}

/// A truncated series value with its certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub tail_bound: f64,
    pub terms_used: usize,
}

impl<T> SeriesValue<T> {
    pub fn exact(value: T) -> Self {
        SeriesValue {
            value,
            tail_bound: 0.0,
            terms_used: 1,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SeriesValue<U> {
        SeriesValue {
            value: f(self.value),
            tail_bound: self.tail_bound,
            terms_used: self.terms_used,
        }
    }
}

/// Sums `Σ_{k≥0} q^k · bracket(k)` where `|bracket(k)|` is non-increasing in
/// k beyond the first term (true for every image series here: the image
/// denominators grow monotonically with the shift). `bracket` returns the
/// term value and a magnitude envelope; the certified remainder after
/// stopping before term k is `q^k · env(k) / (1 - q)`.
///
/// Returns (sum, tail_bound, terms_used).
pub(crate) fn sum_geometric<T, F>(
    q: f64,
    policy: TruncationPolicy,
    mut bracket: F,
    zero: T,
    mut add: impl FnMut(&mut T, T, f64),
) -> (T, f64, usize)
where
    F: FnMut(usize) -> (T, f64),
{
    debug_assert!((0.0..1.0).contains(&q.abs()));
    let qa = q.abs();
    let mut acc = zero;
    let mut qk = 1.0f64;
    let mut used = 0usize;
    loop {
        let (term, env) = bracket(used);
        let tail_if_stop = if qa == 0.0 {
            if used == 0 {
                f64::INFINITY // must take at least the k=0 term
            } else {
                0.0
            }
        } else {
            qk.abs() * env / (1.0 - qa)
        };
        match policy.mode {
            TruncMode::TailTarget => {
                if used > 0 && tail_if_stop <= policy.tail_tol {
                    return (acc, tail_if_stop, used);
                }
            }
            TruncMode::FixedK => {
                if used > policy.k_max {
                    return (acc, tail_if_stop, used);
                }
            }
        }
        if used >= policy.k_max && matches!(policy.mode, TruncMode::TailTarget) {
            // cap reached; report the honest (unmet) bound
            return (acc, tail_if_stop, used);
        }
        add(&mut acc, term, qk);
        qk *= q;
        used += 1;
        if qa == 0.0 && used >= 1 {
            // all higher terms vanish identically
            let (_, _env) = (0, 0.0);
            return (acc, 0.0, used);
        }
    }
}
