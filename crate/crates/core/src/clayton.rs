//! Clayton-copula maxima: exact formulas and an exchangeable path sampler.
//!
//! The model is a sequence `X_1, X_2, …` of Uniform(0,1) variables whose
//! every finite-dimensional CDF is the Clayton copula with generator
//! `ψ(t) = (1 + t)^{-1/θ}` (θ = 1 by default, giving the closed form
//! `F(x_1..x_n) = [Σ 1/x_i − (n−1)]^{-1}`). All running-maximum formulas —
//! `P(M_n ≤ x)`, the scaled version `P(M_n ≤ x^{n^{-α}})`, the
//! consecutive-pair joint, and their difference — follow from the generator.
//!
//! Numerical policy: the recurring quantity `x^{-n^{-α}} − 1` is always
//! computed as `expm1(-θ·n^{-α}·ln x)`. A naive pow-then-subtract loses
//! roughly `log10(1/(n^{-α}·|ln x|))` digits and would poison series terms
//! at large `n`; see the tests pinning this down.
//!
//! The sampler uses the latent-variate (Marshall–Olkin) representation: one
//! mixing draw `V` per path — Exponential(1) at θ = 1, Gamma(1/θ, 1)
//! otherwise — and i.i.d. exponential marks `E_i`, with `X_i = ψ(E_i/V)`.
//! Since ψ decreases, `M_n = ψ(min(E_1..E_n)/V)`, so a path carries O(1)
//! state: `(V, running min, n)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClaytonError {
    #[error("theta must be positive and finite, got {0}")]
    InvalidTheta(f64),
    #[error("coordinate {0} is outside (0, 1)")]
    InvalidCoordinate(f64),
    #[error("joint CDF needs at least one coordinate")]
    EmptyCoordinates,
    #[error("threshold x must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
}

/// Copula parameter. θ = 1 reproduces the closed forms used throughout the
/// tests; other positive values share the same generator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaytonParams {
    theta: f64,
}

impl Default for ClaytonParams {
    fn default() -> Self {
        Self { theta: 1.0 }
    }
}

impl ClaytonParams {
    pub fn new(theta: f64) -> Result<Self, ClaytonError> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(ClaytonError::InvalidTheta(theta));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Generator `ψ(t) = (1 + t)^{-1/θ}` for `t ≥ 0`.
    pub fn psi(&self, t: f64) -> f64 {
        if self.theta == 1.0 {
            1.0 / (1.0 + t)
        } else {
            (1.0 + t).powf(-1.0 / self.theta)
        }
    }

    /// Inverse generator `ψ^{-1}(u) = u^{-θ} − 1` for `u ∈ (0, 1]`,
    /// evaluated as `expm1(-θ·ln u)` so that `u` near 1 keeps full
    /// precision.
    pub fn psi_inv(&self, u: f64) -> f64 {
        if self.theta == 1.0 {
            1.0 / u - 1.0
        } else {
            (-self.theta * u.ln()).exp_m1()
        }
    }

    /// `F(x_1, …, x_n) = ψ(Σ ψ^{-1}(x_i))`; at θ = 1 this is
    /// `[Σ 1/x_i − (n−1)]^{-1}`.
    pub fn joint_cdf(&self, coords: &[f64]) -> Result<f64, ClaytonError> {
        if coords.is_empty() {
            return Err(ClaytonError::EmptyCoordinates);
        }
        let mut acc = 0.0;
        for &x in coords {
            if !(x.is_finite() && 0.0 < x && x < 1.0) {
                return Err(ClaytonError::InvalidCoordinate(x));
            }
            acc += self.psi_inv(x);
        }
        Ok(self.psi(acc))
    }

    /// `P(M_n ≤ x) = ψ(n·ψ^{-1}(x))`; at θ = 1 this is
    /// `[n(1/x − 1) + 1]^{-1}`, strictly decreasing in `n`.
    pub fn max_cdf(&self, n: u64, x: f64) -> Result<f64, ClaytonError> {
        if !(x.is_finite() && 0.0 < x && x < 1.0) {
            return Err(ClaytonError::InvalidThreshold(x));
        }
        assert!(n >= 1, "max_cdf needs n >= 1");
        Ok(self.psi(n as f64 * self.psi_inv(x)))
    }

    /// `p(n) = P(M_n ≤ x^{n^{-α}})`, the probability that the rescaled
    /// maximum `M_n^{n^α}` still sits at or below `x`.
    pub fn scaled_max_cdf(&self, n: u64, ev: &ScaledMaxEvent) -> f64 {
        assert!(n >= 1, "scaled_max_cdf needs n >= 1");
        self.psi(n as f64 * ev.gap(self, n))
    }

    /// `q(n) = P(M_n ≤ x^{n^{-α}}, M_{n+1} ≤ x^{(n+1)^{-α}})`. Because the
    /// first event already pins `X_1..X_n`, this is the `(n+1)`-dimensional
    /// CDF at `n` copies of the smaller threshold and one of the larger:
    /// `ψ(n·g(n) + g(n+1))`.
    pub fn pair_joint_scaled(&self, n: u64, ev: &ScaledMaxEvent) -> f64 {
        assert!(n >= 1, "pair_joint_scaled needs n >= 1");
        self.psi(n as f64 * ev.gap(self, n) + ev.gap(self, n + 1))
    }

    /// `p(n) − q(n) = P(M_n ≤ x^{n^{-α}}, M_{n+1} > x^{(n+1)^{-α}})`.
    ///
    /// At θ = 1 the subtraction collapses algebraically to
    /// `b / ((1+a)(1+a+b))` with `a = n·g(n)`, `b = g(n+1)`, which is free
    /// of cancellation. For other θ the value is the direct difference of
    /// the two CDFs and inherits their rounding (fine for classification,
    /// not for tight identity checks).
    pub fn diff_term(&self, n: u64, ev: &ScaledMaxEvent) -> f64 {
        assert!(n >= 1, "diff_term needs n >= 1");
        let a = n as f64 * ev.gap(self, n);
        let b = ev.gap(self, n + 1);
        if self.theta == 1.0 {
            b / ((1.0 + a) * (1.0 + a + b))
        } else {
            self.psi(a) - self.psi(a + b)
        }
    }
}

/// The event family `A_n = {M_n^{n^α} ≤ x}`: threshold `x ∈ (0,1)` and
/// scaling exponent `α`. `α = 0` is admitted and selects the unscaled
/// maxima (the thresholds stop moving), which is the decreasing-events
/// regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMaxEvent {
    x: f64,
    alpha: f64,
}

impl ScaledMaxEvent {
    pub fn new(x: f64, alpha: f64) -> Result<Self, ClaytonError> {
        if !(x.is_finite() && 0.0 < x && x < 1.0) {
            return Err(ClaytonError::InvalidThreshold(x));
        }
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(ClaytonError::InvalidAlpha(alpha));
        }
        Ok(Self { x, alpha })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The raw threshold `x^{n^{-α}}`, which climbs toward 1 as `n` grows
    /// (for α > 0).
    pub fn threshold(&self, n: u64) -> f64 {
        ((n as f64).powf(-self.alpha) * self.x.ln()).exp()
    }

    /// `g(n) = ψ^{-1}(x^{n^{-α}}) = expm1(-θ·n^{-α}·ln x)` — the stable
    /// route; never materializes the threshold itself.
    fn gap(&self, params: &ClaytonParams, n: u64) -> f64 {
        (-params.theta * (n as f64).powf(-self.alpha) * self.x.ln()).exp_m1()
    }
}

/// One path of the exchangeable sequence, carrying only the latent mixing
/// variate, the running minimum of the exponential marks, and the step
/// count. `M_n` is undefined before the first step.
#[derive(Debug, Clone)]
pub struct ClaytonPath {
    theta: f64,
    v: f64,
    min_mark: f64,
    n: u64,
    rng: ChaCha8Rng,
}

impl ClaytonPath {
    /// Stream 0 of the given seed.
    pub fn new(params: &ClaytonParams, seed: u64) -> Self {
        Self::with_stream(params, seed, 0)
    }

    /// Deterministic per-(seed, stream) path; distinct streams of one seed
    /// are independent, which is how parallel path sets stay reproducible.
    pub fn with_stream(params: &ClaytonParams, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let theta = params.theta();
        let v = if theta == 1.0 {
            Exp1.sample(&mut rng)
        } else {
            Gamma::new(1.0 / theta, 1.0)
                .expect("theta was validated positive")
                .sample(&mut rng)
        };
        Self {
            theta,
            v,
            min_mark: f64::INFINITY,
            n: 0,
            rng,
        }
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Draw the next variate; returns `(X_n, M_n)`.
    pub fn step(&mut self) -> (f64, f64) {
        let e: f64 = Exp1.sample(&mut self.rng);
        self.n += 1;
        if e < self.min_mark {
            self.min_mark = e;
        }
        (self.psi_at(e), self.psi_at(self.min_mark))
    }

    /// `M_n = ψ(min_mark / V)`, or `None` before the first step.
    pub fn current_max(&self) -> Option<f64> {
        (self.n > 0).then(|| self.psi_at(self.min_mark))
    }

    /// `1 − M_n^{n^α}`, the deviation of the rescaled maximum from its
    /// limit, computed as `-expm1(-n^α·ln(1 + min/V)/θ)` so that values
    /// like 1e-12 survive. `None` before the first step.
    pub fn scaled_deviation(&self, alpha: f64) -> Option<f64> {
        if self.n == 0 {
            return None;
        }
        let log_m = -(self.min_mark / self.v).ln_1p() / self.theta;
        Some(-((self.n as f64).powf(alpha) * log_m).exp_m1())
    }

    fn psi_at(&self, mark: f64) -> f64 {
        let t = mark / self.v;
        if self.theta == 1.0 {
            1.0 / (1.0 + t)
        } else {
            (1.0 + t).powf(-1.0 / self.theta)
        }
    }
}
