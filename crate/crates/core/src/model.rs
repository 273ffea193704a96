//! Physical parameters, complex rates, the drift matrix and the undamped
//! normal modes of the linearized opto-mechanical system.
//!
//! All simulation parameters are dimensionless, conventionally in units of the
//! cavity linewidth `kappa`. The operator ordering used throughout is
//! `(a, a†, b, b†)`.

use num_complex::Complex64 as C64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Operator indices into the `(a, a†, b, b†)` ordering.
pub const A: usize = 0;
pub const AD: usize = 1;
pub const B: usize = 2;
pub const BD: usize = 3;

/// Dimensional inputs of the bare radiation-pressure coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Optical angular frequency (rad/s).
    pub omega_c: f64,
    /// Cavity length (m).
    pub cavity_length: f64,
    /// Effective mirror mass (kg).
    pub eff_mass: f64,
    /// Mechanical angular frequency (rad/s).
    pub omega_m_phys: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("omega_c", self.omega_c)?;
        positive("cavity_length", self.cavity_length)?;
        positive("eff_mass", self.eff_mass)?;
        positive("omega_m_phys", self.omega_m_phys)
    }
}

/// One dimensionless configuration of the pumped cavity, the mechanics and
/// the source cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Optical energy decay rate.
    pub kappa: f64,
    /// Source cavity decay rate.
    pub gamma: f64,
    /// Mechanical energy decay rate.
    pub mu: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub nbar: f64,
    /// Mechanical frequency.
    pub omega_m: f64,
    /// Effective cavity detuning from the pump.
    pub delta: f64,
    /// Effective (pump-enhanced) coupling, real by choice of pump phase.
    pub g: f64,
    /// Keep only the red-sideband (beam-splitter) part of the coupling.
    pub rwa: bool,
}

impl SimParams {
    /// Parameters of the reference figures: `kappa = 1`, `gamma = 0.9`,
    /// `mu = 0.001`, `nbar = 0`, `omega_m = 4.4`, `delta = 1.02 omega_m`.
    pub fn reference(g: f64) -> Self {
        let omega_m = 4.4;
        SimParams {
            kappa: 1.0,
            gamma: 0.9,
            mu: 0.001,
            nbar: 0.0,
            omega_m,
            delta: 1.02 * omega_m,
            g,
            rwa: false,
        }
    }

    /// Same as [`SimParams::reference`] but with the measured mechanical damping
    /// `mu = 6.5e-4` instead of the rounded value used for the figures.
    pub fn experiment(g: f64) -> Self {
        SimParams {
            mu: 6.5e-4,
            ..Self::reference(g)
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        non_negative("gamma", self.gamma)?;
        non_negative("mu", self.mu)?;
        non_negative("nbar", self.nbar)?;
        positive("omega_m", self.omega_m)?;
        non_negative("g", self.g)?;
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(())
    }

    /// Beam-splitter and counter-rotating coupling strengths `(g_r, g_c)`.
    /// The counter-rotating part vanishes under the rotating-wave approximation.
    /// As [`SimParams::validate`], but also accepts a lossless cavity
    /// (`kappa = 0`), which the equations of motion allow even though the
    /// steady state does not exist.
    pub fn validate_dynamics(&self) -> Result<()> {
        if self.kappa == 0.0 {
            SimParams { kappa: 1.0, ..*self }.validate()
        } else {
            self.validate()
        }
    }

    pub fn couplings(&self) -> (f64, f64) {
        if self.rwa {
            (self.g, 0.0)
        } else {
            (self.g, self.g)
        }
    }

    /// Cascaded coupling strength `sqrt(gamma kappa)`.
    pub fn cascade_rate(&self) -> f64 {
        (self.gamma * self.kappa).sqrt()
    }

    pub fn rates(&self) -> DerivedRates {
        DerivedRates::new(self)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, alloc::format!("must be > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, alloc::format!("must be >= 0, got {v}")))
    }
}

/// Complex decay/rotation rates appearing in the moment equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// `i delta + kappa/2`
    pub kappa_t: C64,
    /// `i omega_m + mu/2`
    pub mu_t: C64,
    /// `2 i delta + (kappa + gamma)/2`
    pub sigma: C64,
    /// `i (omega_m + delta) + (mu + gamma)/2`
    pub tau_plus: C64,
    /// `i (omega_m - delta) + (mu + gamma)/2`
    pub tau_minus: C64,
}

impl DerivedRates {
    pub fn new(p: &SimParams) -> Self {
        DerivedRates {
            kappa_t: C64::new(p.kappa / 2.0, p.delta),
            mu_t: C64::new(p.mu / 2.0, p.omega_m),
            sigma: C64::new((p.kappa + p.gamma) / 2.0, 2.0 * p.delta),
            tau_plus: C64::new((p.mu + p.gamma) / 2.0, p.omega_m + p.delta),
            tau_minus: C64::new((p.mu + p.gamma) / 2.0, p.omega_m - p.delta),
        }
    }
}

/// Drift of the first moments of `(a, a†, b, b†)`: `d<A>/dt = K <A>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub k: [[C64; 4]; 4],
}

impl DriftMatrix {
    pub fn diagonal(&self) -> [C64; 4] {
        [self.k[0][0], self.k[1][1], self.k[2][2], self.k[3][3]]
    }
}

pub fn build_drift_matrix(p: &SimParams) -> Result<DriftMatrix> {
    p.validate()?;
    Ok(drift_matrix_unchecked(p))
}

pub(crate) fn drift_matrix_unchecked(p: &SimParams) -> DriftMatrix {
    let r = p.rates();
    let (gr, gc) = p.couplings();
    let i = C64::i();
    let mut k = [[C64::new(0.0, 0.0); 4]; 4];

    k[A][A] = -r.kappa_t;
    k[AD][AD] = -r.kappa_t.conj();
    k[B][B] = -r.mu_t;
    k[BD][BD] = -r.mu_t.conj();

    // beam-splitter terms a b† + a† b
    k[A][B] = -i * gr;
    k[AD][BD] = i * gr;
    k[B][A] = -i * gr;
    k[BD][AD] = i * gr;

    // counter-rotating terms a b + a† b†
    k[A][BD] = -i * gc;
    k[AD][B] = i * gc;
    k[B][AD] = -i * gc;
    k[BD][A] = i * gc;

    DriftMatrix { k }
}

/// Undamped normal modes of the linearized Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModes {
    pub omega_plus: C64,
    pub omega_minus: C64,
    pub omega_plus_sq: f64,
    pub omega_minus_sq: f64,
    pub oscillatory: bool,
}

pub fn normal_mode_frequencies(p: &SimParams) -> Result<NormalModes> {
    p.validate()?;
    let (d2, w2) = (p.delta * p.delta, p.omega_m * p.omega_m);
    let dw = p.delta * p.omega_m;
    let disc = (d2 - w2) * (d2 - w2) + 16.0 * p.g * p.g * dw;
    let sum = d2 + w2;

    let (plus_sq, minus_sq) = if disc >= 0.0 {
        let plus_sq = 0.5 * (sum + disc.sqrt());
        // product of the roots is dw (dw - 4 g^2); avoids cancellation near threshold
        let product = dw * (dw - 4.0 * p.g * p.g);
        let minus_sq = if plus_sq != 0.0 {
            product / plus_sq
        } else {
            0.5 * (sum - disc.sqrt())
        };
        (C64::new(plus_sq, 0.0), C64::new(minus_sq, 0.0))
    } else {
        let root = C64::new(0.0, (-disc).sqrt());
        (0.5 * (sum + root), 0.5 * (sum - root))
    };

    Ok(NormalModes {
        omega_plus: plus_sq.sqrt(),
        omega_minus: minus_sq.sqrt(),
        omega_plus_sq: plus_sq.re,
        omega_minus_sq: minus_sq.re,
        oscillatory: oscillation_condition(p),
    })
}

pub fn is_oscillatory(p: &SimParams) -> Result<bool> {
    p.validate()?;
    Ok(oscillation_condition(p))
}

fn oscillation_condition(p: &SimParams) -> bool {
    4.0 * p.g * p.g <= p.delta * p.omega_m
}

/// Bare single-photon radiation-pressure coupling
/// `G = (omega_c / L) sqrt(hbar / (m omega_m))`, in rad/s.
pub fn bare_coupling(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    Ok(p.omega_c / p.cavity_length * (HBAR / (p.eff_mass * p.omega_m_phys)).sqrt())
}

/// Pump-enhanced coupling `g = G alpha0` for a real intracavity amplitude.
pub fn effective_coupling(bare: f64, alpha0: f64) -> Result<f64> {
    if !(alpha0.is_finite() && alpha0 >= 0.0) {
        return Err(Error::invalid("alpha0", "must be finite and >= 0"));
    }
    if !bare.is_finite() {
        return Err(Error::invalid("G", "must be finite"));
    }
    Ok(bare * alpha0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bare_coupling_reference_value() {
        let p = PhysicalParams {
            omega_c: 1.77e15,
            cavity_length: 0.025,
            eff_mass: 1.45e-10,
            omega_m_phys: 5.95e6,
        };
        // hand evaluation of (omega_c/L) sqrt(hbar/(m omega_m))
        assert_relative_eq!(bare_coupling(&p).unwrap(), 24.753_057_695_714_71, max_relative = 1e-12);
    }

    #[test]
    fn bare_coupling_scaling() {
        let p = PhysicalParams {
            omega_c: 1.77e15,
            cavity_length: 0.025,
            eff_mass: 1.45e-10,
            omega_m_phys: 5.95e6,
        };
        let g0 = bare_coupling(&p).unwrap();
        let heavy = PhysicalParams { eff_mass: 2.0 * p.eff_mass, ..p };
        let long = PhysicalParams { cavity_length: 2.0 * p.cavity_length, ..p };
        assert_relative_eq!(bare_coupling(&heavy).unwrap(), g0 / 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(bare_coupling(&long).unwrap(), g0 / 2.0, max_relative = 1e-14);
        assert_eq!(bare_coupling(&p).unwrap(), g0);
    }

    #[test]
    fn bare_coupling_rejects_non_positive() {
        let p = PhysicalParams {
            omega_c: 1.0,
            cavity_length: 0.0,
            eff_mass: 1.0,
            omega_m_phys: 1.0,
        };
        assert!(matches!(
            bare_coupling(&p),
            Err(Error::InvalidParameter { name: "cavity_length", .. })
        ));
    }

    #[test]
    fn effective_coupling_product() {
        assert_eq!(effective_coupling(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(effective_coupling(2.0, 3.0).unwrap(), 6.0);
        assert_eq!(effective_coupling(7.5, 1.0).unwrap(), 7.5);
        assert!(effective_coupling(2.0, -1.0).is_err());
    }

    #[test]
    fn drift_matrix_entries_at_reference_params() {
        let k = build_drift_matrix(&SimParams::reference(1.5)).unwrap().k;
        assert_relative_eq!(k[A][B].im, -1.5);
        assert_eq!(k[A][B].re, 0.0);
        assert_relative_eq!(k[A][A].re, -0.5);
        assert_relative_eq!(k[A][A].im, -4.488, epsilon = 1e-12);
        assert_eq!(k[A][AD], c(0.0, 0.0));
        assert_eq!(k[B][BD], c(0.0, 0.0));
        assert_eq!(k[AD][B], c(0.0, 1.5));
        assert_eq!(k[BD][A], c(0.0, 1.5));
        assert_eq!(k[B][AD], c(0.0, -1.5));
    }

    #[test]
    fn drift_matrix_uncoupled_is_diagonal() {
        let p = SimParams::reference(0.0);
        let m = build_drift_matrix(&p).unwrap();
        let r = p.rates();
        for (j, row) in m.k.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                if j != l {
                    assert_eq!(*v, c(0.0, 0.0));
                }
            }
        }
        assert_eq!(
            m.diagonal(),
            [-r.kappa_t, -r.kappa_t.conj(), -r.mu_t, -r.mu_t.conj()]
        );
    }

    #[test]
    fn rwa_keeps_only_swap_couplings() {
        let full = build_drift_matrix(&SimParams::reference(1.5)).unwrap();
        let rwa = build_drift_matrix(&SimParams { rwa: true, ..SimParams::reference(1.5) }).unwrap();
        assert_eq!(full.diagonal(), rwa.diagonal());
        for (j, l) in [(A, BD), (AD, B), (B, AD), (BD, A)] {
            assert_eq!(rwa.k[j][l], c(0.0, 0.0));
        }
        for (j, l) in [(A, B), (AD, BD), (B, A), (BD, AD)] {
            assert_eq!(rwa.k[j][l], full.k[j][l]);
        }
    }

    #[test]
    fn normal_modes_reference_params() {
        let m = normal_mode_frequencies(&SimParams::reference(1.5)).unwrap();
        assert_relative_eq!(m.omega_plus.re, 5.752_230_288_244_042, epsilon = 1e-12);
        assert_relative_eq!(m.omega_minus.re, 2.532_585_775_646_675, epsilon = 1e-12);
        assert!(m.oscillatory);
    }

    #[test]
    fn normal_modes_uncoupled() {
        let p = SimParams { delta: 3.0, omega_m: 5.0, ..SimParams::reference(0.0) };
        let m = normal_mode_frequencies(&p).unwrap();
        assert_relative_eq!(m.omega_plus.re, 5.0, epsilon = 1e-14);
        assert_relative_eq!(m.omega_minus.re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_modes_threshold_degenerate() {
        let p = SimParams { delta: 2.0, omega_m: 8.0, ..SimParams::reference(2.0) };
        let m = normal_mode_frequencies(&p).unwrap();
        assert!(m.omega_minus.norm() <= 1e-12);
        assert!(m.oscillatory);
    }

    #[test]
    fn oscillation_predicate() {
        assert!(is_oscillatory(&SimParams::reference(1.5)).unwrap());
        assert!(is_oscillatory(&SimParams::reference(0.0)).unwrap());
        let p = SimParams::reference(1.0);
        let g = (p.delta * p.omega_m).sqrt();
        assert!(!is_oscillatory(&SimParams { g, ..p }).unwrap());
        let p = SimParams { delta: 1.0, omega_m: 1.0, ..SimParams::reference(3.0) };
        assert!(!is_oscillatory(&p).unwrap());
        let m = normal_mode_frequencies(&p).unwrap();
        assert!(m.omega_minus_sq < 0.0);
        assert!(m.omega_minus.im > 0.0);
    }

    #[test]
    fn validation_errors() {
        let bad = SimParams { kappa: 0.0, ..SimParams::reference(1.0) };
        assert!(build_drift_matrix(&bad).is_err());
        let bad = SimParams { g: -1.0, ..SimParams::reference(1.0) };
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter { name: "g", .. })
        ));
        let bad = SimParams { nbar: f64::NAN, ..SimParams::reference(1.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn derived_rates_match_definitions() {
        let p = SimParams::reference(1.5);
        let r = p.rates();
        assert_eq!(r.kappa_t, c(0.5, p.delta));
        assert_eq!(r.mu_t, c(0.0005, 4.4));
        assert_relative_eq!(r.sigma.re, 0.95);
        assert_relative_eq!(r.sigma.im, 2.0 * 4.488, epsilon = 1e-12);
        assert_relative_eq!(r.tau_plus.re, 0.4505);
        assert_relative_eq!(r.tau_minus.im, 4.4 - 4.488, epsilon = 1e-12);
    }
}
