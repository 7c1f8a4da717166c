//! Channel and strategy types together with the closed-form TIN rate expressions.
//!
//! Users are indexed `0` and `1` throughout; for user `k` the interferer is
//! `j = 1 - k`. Powers are complex-signal variances, so a proper Gaussian
//! input of variance `p` at receiver `k` contributes `|h_kk|^2 p` to the
//! received power and the noise variance is used as is (no factor 1/2).

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Transmit powers `[p1, p2]`.
pub type Powers = [f64; 2];

/// Two-user interference channel `y_k = h_k1 x_1 + h_k2 x_2 + n_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    h: [[Complex64; 2]; 2],
    noise: [f64; 2],
}

impl ChannelRealization {
    /// Builds a channel from the four complex coefficients and the two
    /// (complex) noise variances.
    pub fn new(
        h11: Complex64,
        h12: Complex64,
        h21: Complex64,
        h22: Complex64,
        noise1: f64,
        noise2: f64,
    ) -> Result<Self> {
        let h = [[h11, h12], [h21, h22]];
        for (name, value) in ["h11", "h12", "h21", "h22"].iter().zip(h.iter().flatten()) {
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(Error::InvalidChannel(format!("{name} is not finite")));
            }
        }
        for (k, n) in [noise1, noise2].iter().enumerate() {
            if !n.is_finite() || *n <= 0.0 {
                return Err(Error::InvalidChannel(format!(
                    "noise variance of user {} must be positive and finite, got {n}",
                    k + 1
                )));
            }
        }
        Ok(Self { h, noise: [noise1, noise2] })
    }

    /// Builds a channel from coefficient magnitudes and phases (radians),
    /// ordered `[h11, h12, h21, h22]`.
    pub fn from_polar(mag: [f64; 4], phase: [f64; 4], noise1: f64, noise2: f64) -> Result<Self> {
        let c = |i: usize| Complex64::from_polar(mag[i], phase[i]);
        if mag.iter().any(|m| *m < 0.0) {
            return Err(Error::InvalidChannel("negative coefficient magnitude".into()));
        }
        Self::new(c(0), c(1), c(2), c(3), noise1, noise2)
    }

    /// Coefficient from transmitter `j` to receiver `k` (0-based).
    pub fn coefficient(&self, k: usize, j: usize) -> Complex64 {
        self.h[k][j]
    }

    /// Power gain `|h_kj|^2`.
    pub fn gain(&self, k: usize, j: usize) -> f64 {
        self.h[k][j].norm_sqr()
    }

    pub fn noise(&self, k: usize) -> f64 {
        self.noise[k]
    }

    /// Returns a copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        for row in out.h.iter_mut() {
            for h in row.iter_mut() {
                *h *= factor;
            }
        }
        out
    }

    /// Proper-signaling rate of user `k` without argument checks.
    #[inline]
    pub(crate) fn proper_rate(&self, k: usize, p: &Powers) -> f64 {
        let j = 1 - k;
        let interference = self.noise[k] + self.gain(k, j) * p[j];
        (self.gain(k, k) * p[k] / interference).ln_1p() / LN_2
    }

    #[inline]
    pub(crate) fn proper_rates(&self, p: &Powers) -> [f64; 2] {
        [self.proper_rate(0, p), self.proper_rate(1, p)]
    }
}

/// Per-user variance `c_k`, impropriety magnitude `kappa_k` and pseudovariance
/// phase `phi_k`, so that the pseudovariance is `kappa_k * exp(i phi_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitStrategy {
    pub c: [f64; 2],
    pub kappa: [f64; 2],
    pub phi: [f64; 2],
}

impl TransmitStrategy {
    pub fn proper(p: Powers) -> Self {
        Self { c: p, kappa: [0.0; 2], phi: [0.0; 2] }
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..2 {
            let (c, kappa, phi) = (self.c[k], self.kappa[k], self.phi[k]);
            if !c.is_finite() || !kappa.is_finite() || !phi.is_finite() {
                return Err(Error::InvalidStrategy(format!("non-finite parameter for user {}", k + 1)));
            }
            if c < 0.0 {
                return Err(Error::InvalidStrategy(format!("negative variance {c} for user {}", k + 1)));
            }
            if kappa < 0.0 || kappa > c {
                return Err(Error::InvalidStrategy(format!(
                    "impropriety {kappa} outside [0, {c}] for user {}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    fn pseudovariance(&self, k: usize) -> Complex64 {
        Complex64::from_polar(self.kappa[k], self.phi[k])
    }
}

/// Per-user power limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget([f64; 2]);

impl PowerBudget {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite()) || p1 < 0.0 || p2 < 0.0 {
            return Err(Error::InvalidConfig(format!("power budget must be nonnegative, got ({p1}, {p2})")));
        }
        Ok(Self([p1, p2]))
    }

    pub fn user(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_array(&self) -> Powers {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0[0].max(self.0[1])
    }
}

/// Achievable rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn get(&self, k: usize) -> f64 {
        match k {
            0 => self.r1,
            1 => self.r2,
            _ => panic!("user index {k} out of range"),
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.r1, self.r2]
    }
}

impl From<[f64; 2]> for RatePair {
    fn from(r: [f64; 2]) -> Self {
        Self { r1: r[0], r2: r[1] }
    }
}

/// Rate profile `rho = (beta, 1 - beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateProfile {
    beta: f64,
}

impl RateProfile {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> [f64; 2] {
        [self.beta, 1.0 - self.beta]
    }

    /// Balanced value `min_k r_k / rho_k` over users with `rho_k > 0`.
    pub fn balanced(&self, rates: [f64; 2]) -> f64 {
        self.rho()
            .iter()
            .zip(rates)
            .filter(|(rho, _)| **rho > 0.0)
            .map(|(rho, r)| r / rho)
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_powers(p: &Powers) -> Result<()> {
    for (k, v) in p.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::NegativePower { user: k + 1, value: *v });
        }
    }
    Ok(())
}

/// Shannon rates of both users for a (possibly improper) Gaussian strategy.
pub fn rate_pair_improper(ch: &ChannelRealization, x: &TransmitStrategy) -> Result<RatePair> {
    x.validate()?;
    let mut r = [0.0; 2];
    for (k, rk) in r.iter_mut().enumerate() {
        let j = 1 - k;
        let hkk2 = ch.coefficient(k, k).powi(2);
        let hkj2 = ch.coefficient(k, j).powi(2);
        let var_s = ch.gain(k, j) * x.c[j] + ch.noise(k);
        let var_y = ch.gain(k, k) * x.c[k] + var_s;
        let pv_s = hkj2 * x.pseudovariance(j);
        let pv_y = hkk2 * x.pseudovariance(k) + pv_s;
        let proper = (ch.gain(k, k) * x.c[k] / var_s).ln_1p();
        let impropriety = (-pv_y.norm_sqr() / (var_y * var_y)).ln_1p()
            - (-pv_s.norm_sqr() / (var_s * var_s)).ln_1p();
        *rk = ((proper + 0.5 * impropriety) / LN_2).max(0.0);
    }
    Ok(r.into())
}

/// Rates with proper signals, `r_k = log2(1 + |h_kk|^2 p_k / (n_k + |h_kj|^2 p_j))`.
pub fn rate_pair_proper(ch: &ChannelRealization, p: Powers) -> Result<RatePair> {
    check_powers(&p)?;
    Ok(ch.proper_rates(&p).into())
}

/// Phase-free upper bound on the improper rates: the received pseudovariance
/// magnitude is replaced by its smallest possible value
/// `| |h_kk|^2 kappa_k - |h_kj|^2 kappa_j |`.
pub fn rate_upper_bound(ch: &ChannelRealization, x: &TransmitStrategy) -> Result<RatePair> {
    x.validate()?;
    let mut r = [0.0; 2];
    for (k, rk) in r.iter_mut().enumerate() {
        let j = 1 - k;
        let var_s = ch.gain(k, j) * x.c[j] + ch.noise(k);
        let var_y = ch.gain(k, k) * x.c[k] + var_s;
        let pv_y = ch.gain(k, k) * x.kappa[k] - ch.gain(k, j) * x.kappa[j];
        let pv_s = ch.gain(k, j) * x.kappa[j];
        let proper = (ch.gain(k, k) * x.c[k] / var_s).ln_1p();
        let impropriety =
            (-(pv_y * pv_y) / (var_y * var_y)).ln_1p() - (-(pv_s * pv_s) / (var_s * var_s)).ln_1p();
        *rk = ((proper + 0.5 * impropriety) / LN_2).max(0.0);
    }
    Ok(r.into())
}

/// Replaces every coefficient by its modulus.
pub fn enhance(ch: &ChannelRealization) -> ChannelRealization {
    let mut out = *ch;
    for row in out.h.iter_mut() {
        for h in row.iter_mut() {
            *h = Complex64::new(h.norm(), 0.0);
        }
    }
    out
}

/// Pseudovariance phase offsets that make the rate bound tight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// `psi[0] = phi_1 - phi_2` for user 1, `psi[1] = phi_2 - phi_1` for user 2, in `[0, 2pi)`.
    pub psi: [f64; 2],
    /// Whether both offsets can be realized by one pair `(phi_1, phi_2)`.
    pub simultaneous: bool,
}

pub const ALIGNMENT_TOLERANCE: f64 = 1e-12;

/// Phase offsets `phi_k - phi_j = pi + arg(h_kj^2 / h_kk^2)` that put the two
/// received pseudovariances in antiphase at receiver `k`.
pub fn alignment_phases(ch: &ChannelRealization) -> Result<Alignment> {
    const NAMES: [[&str; 2]; 2] = [["h11", "h12"], ["h21", "h22"]];
    for k in 0..2 {
        for j in 0..2 {
            if ch.coefficient(k, j).norm() == 0.0 {
                return Err(Error::UndefinedPhase(NAMES[k][j]));
            }
        }
    }
    let mut psi = [0.0; 2];
    for (k, psi_k) in psi.iter_mut().enumerate() {
        let j = 1 - k;
        let offset = PI + 2.0 * (ch.coefficient(k, j).arg() - ch.coefficient(k, k).arg());
        *psi_k = offset.rem_euclid(TAU);
    }
    // Both hold iff psi_1 = -psi_2 (mod 2pi).
    let mismatch = (psi[0] + psi[1]).rem_euclid(TAU);
    let simultaneous = mismatch.min(TAU - mismatch) <= ALIGNMENT_TOLERANCE;
    Ok(Alignment { psi, simultaneous })
}

/// Channel realization and power limits of the standard two-user benchmark
/// (unit noise, 10 dB transmit SNR).
pub mod scenario {
    use super::{ChannelRealization, PowerBudget};

    pub const MAGNITUDES: [f64; 4] = [2.0310, 1.4766, 0.7280, 0.9935];
    pub const PHASES: [f64; 4] = [-0.6858, 2.6452, 1.9726, -0.6676];
    pub const POWER: f64 = 10.0;

    pub fn reference_channel() -> ChannelRealization {
        ChannelRealization::from_polar(MAGNITUDES, PHASES, 1.0, 1.0).expect("valid reference channel")
    }

    pub fn reference_budget() -> PowerBudget {
        PowerBudget::new(POWER, POWER).expect("valid reference budget")
    }
}
