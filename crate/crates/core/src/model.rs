//! Physical parameters and the change of variables that brings the
//! Hansen–Spies laminated beam into three-field Timoshenko form.
//!
//! The Hansen–Spies unknowns are the transverse displacement `w`, the
//! rotation `psi` and the interfacial slip `S`. The working unknowns are
//! `w`, `xi = 3S - psi` and `s = -3S`, with
//!
//! ```text
//! rho1 w_tt - k (w_x + xi + s)_x                    = 0
//! rho2 xi_tt - b xi_xx + k (w_x + xi + s)           = 0
//! rho2 s_tt - b s_xx + 3k (w_x + xi + s) + gamma s + beta s_t = 0
//! ```
//!
//! clamped at `x = 0` and carrying dynamic (Venttsel) conditions at `x = L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

/// Material constants of the original laminated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HansenSpiesParams {
    /// Mass density.
    pub rho: f64,
    /// Mass moment of inertia.
    pub i_rho: f64,
    /// Shear stiffness.
    pub g: f64,
    /// Flexural rigidity.
    pub d: f64,
    /// Adhesive stiffness.
    pub delta0: f64,
    /// Adhesive structural damping.
    pub gamma0: f64,
    /// Beam length.
    pub length: f64,
}

impl HansenSpiesParams {
    pub fn validate(&self) -> Result<()> {
        positive("rho", self.rho)?;
        positive("i_rho", self.i_rho)?;
        positive("g", self.g)?;
        positive("d", self.d)?;
        non_negative("delta0", self.delta0)?;
        non_negative("gamma0", self.gamma0)?;
        positive("length", self.length)
    }
}

/// Coefficients of the three-field system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub rho1: f64,
    pub rho2: f64,
    pub k: f64,
    pub b: f64,
    pub gamma: f64,
    /// Structural damping on the slip equation; zero for the controlled system.
    pub beta: f64,
    pub length: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            k: 1.0,
            b: 1.0,
            gamma: 1.0,
            beta: 0.0,
            length: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("rho1", self.rho1)?;
        positive("rho2", self.rho2)?;
        positive("k", self.k)?;
        positive("b", self.b)?;
        non_negative("gamma", self.gamma)?;
        non_negative("beta", self.beta)?;
        positive("length", self.length)
    }

    /// Checks the extra conditions of the conservative control problem:
    /// no damping and a strictly positive adhesive stiffness.
    pub fn validate_conservative(&self) -> Result<()> {
        self.validate()?;
        if self.beta != 0.0 {
            return Err(Error::ParameterDomain {
                name: "beta",
                value: self.beta,
                reason: "the conservative generator requires beta = 0",
            });
        }
        if self.gamma <= 0.0 {
            return Err(Error::PhaseSpace);
        }
        Ok(())
    }

    /// Travel time of the slowest characteristic across the beam.
    pub fn crossing_time(&self) -> f64 {
        self.length * (self.rho1 / self.k).sqrt().max((self.rho2 / self.b).sqrt())
    }

    /// Default control horizon: four crossing times.
    pub fn default_horizon(&self) -> f64 {
        4.0 * self.crossing_time()
    }

    /// Weights `(3k, 3b, b)` pairing the boundary controls with the
    /// boundary traces.
    pub fn duality_weights(&self) -> [f64; 3] {
        [3.0 * self.k, 3.0 * self.b, self.b]
    }

    pub fn conservative(mut self) -> Self {
        self.beta = 0.0;
        self
    }
}

/// Maps Hansen–Spies constants to the three-field coefficients:
/// `rho1 = rho`, `rho2 = I_rho`, `k = G`, `b = D`, `3 gamma = 4 delta0`,
/// `3 beta = 4 gamma0`.
pub fn from_hansen_spies(p: &HansenSpiesParams) -> Result<PhysicalParams> {
    p.validate()?;
    Ok(PhysicalParams {
        rho1: p.rho,
        rho2: p.i_rho,
        k: p.g,
        b: p.d,
        gamma: 4.0 * p.delta0 / 3.0,
        beta: 4.0 * p.gamma0 / 3.0,
        length: p.length,
    })
}

/// Inverse of [`from_hansen_spies`].
pub fn to_hansen_spies(p: &PhysicalParams) -> Result<HansenSpiesParams> {
    p.validate()?;
    Ok(HansenSpiesParams {
        rho: p.rho1,
        i_rho: p.rho2,
        g: p.k,
        d: p.b,
        delta0: 3.0 * p.gamma / 4.0,
        gamma0: 3.0 * p.beta / 4.0,
        length: p.length,
    })
}

/// Coefficients of `(w, xi, s)` in terms of `(w, psi, S)`.
pub const STATE_TRANSFORM: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, -1.0, 3.0], [0.0, 0.0, -3.0]];

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Pointwise `(w, psi, S) -> (w, 3S - psi, -3S)`.
pub fn transform_state(w: &[f64], psi: &[f64], slip: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_same_len(w, psi)?;
    check_same_len(w, slip)?;
    let xi = psi.iter().zip(slip).map(|(p, sl)| 3.0 * sl - p).collect();
    let s = slip.iter().map(|sl| -3.0 * sl).collect();
    Ok((w.to_vec(), xi, s))
}

/// Pointwise `(w, xi, s) -> (w, -xi - s, -s/3)`.
pub fn inverse_transform_state(w: &[f64], xi: &[f64], s: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_same_len(w, xi)?;
    check_same_len(w, s)?;
    let psi = xi.iter().zip(s).map(|(x, s)| -x - s).collect();
    let slip = s.iter().map(|s| -s / 3.0).collect();
    Ok((w.to_vec(), psi, slip))
}

/// Nodal samples of a continuous state on `x_j = j L / n`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousState {
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
    pub w_t: Vec<f64>,
    pub xi_t: Vec<f64>,
    pub s_t: Vec<f64>,
    /// `(Psi4, Psi5, Psi6)`, the velocities of the boundary masses.
    pub boundary_velocity: [f64; 3],
}

impl ContinuousState {
    /// Samples analytic fields; the boundary velocities are taken as the
    /// traces of the velocity fields, which places the state in the domain
    /// of the generator.
    pub fn sample<F>(n: usize, length: f64, fields: [F; 6]) -> Self
    where
        F: Fn(f64) -> f64,
    {
        let xs: Vec<f64> = (0..=n).map(|j| j as f64 * length / n as f64).collect();
        let eval = |f: &F| xs.iter().map(|&x| f(x)).collect::<Vec<f64>>();
        let [w, xi, s, w_t, xi_t, s_t] = fields;
        let w_t = eval(&w_t);
        let xi_t = eval(&xi_t);
        let s_t = eval(&s_t);
        let boundary_velocity = [w_t[n], xi_t[n], s_t[n]];
        Self {
            w: eval(&w),
            xi: eval(&xi),
            s: eval(&s),
            w_t,
            xi_t,
            s_t,
            boundary_velocity,
        }
    }

    pub fn nodes(&self) -> usize {
        self.w.len()
    }

    /// Checks the clamped root and, when `in_domain`, that the boundary
    /// velocities equal the velocity traces.
    pub fn check(&self, tol: f64, in_domain: bool) -> Result<()> {
        let len = self.w.len();
        for f in [&self.xi, &self.s, &self.w_t, &self.xi_t, &self.s_t] {
            check_same_len(&self.w, f)?;
        }
        if len < 2 {
            return Err(Error::Shape { expected: 2, found: len });
        }
        for (name, f) in [("w(0)", &self.w), ("xi(0)", &self.xi), ("s(0)", &self.s)] {
            if f[0].abs() > tol {
                return Err(Error::Domain(format!("{name} = {} violates the clamped root", f[0])));
            }
        }
        if in_domain {
            let traces = [self.w_t[len - 1], self.xi_t[len - 1], self.s_t[len - 1]];
            for (c, (&psi, &tr)) in self.boundary_velocity.iter().zip(&traces).enumerate() {
                if (psi - tr).abs() > tol * (1.0 + tr.abs()) {
                    return Err(Error::Domain(format!(
                        "boundary velocity Psi{} = {psi} differs from the trace {tr}",
                        c + 4
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(rho: f64, i_rho: f64, g: f64, d: f64, delta0: f64, gamma0: f64) -> HansenSpiesParams {
        HansenSpiesParams {
            rho,
            i_rho,
            g,
            d,
            delta0,
            gamma0,
            length: 1.0,
        }
    }

    #[test]
    fn hansen_spies_reference_values() {
        let p = from_hansen_spies(&hs(1.0, 2.0, 3.0, 4.0, 3.0, 1.5)).unwrap();
        assert_eq!((p.rho1, p.rho2, p.k, p.b), (1.0, 2.0, 3.0, 4.0));
        assert_eq!(p.gamma, 4.0);
        assert_eq!(p.beta, 2.0);
    }

    #[test]
    fn zero_adhesive_terms() {
        let p = from_hansen_spies(&hs(1.0, 1.0, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(p.gamma, 0.0);
        assert_eq!(p.beta, 0.0);
        assert_eq!((p.rho1, p.rho2, p.k, p.b, p.length), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn fractional_adhesive_terms() {
        let p = from_hansen_spies(&hs(1.0, 1.0, 1.0, 1.0, 0.75, 0.3)).unwrap();
        assert!((p.gamma - 1.0).abs() < 1e-15);
        assert!((p.beta - 0.4).abs() < 1e-15);
    }

    #[test]
    fn non_positive_constants_rejected() {
        for bad in [
            hs(0.0, 1.0, 1.0, 1.0, 0.0, 0.0),
            hs(1.0, -1.0, 1.0, 1.0, 0.0, 0.0),
            hs(1.0, 1.0, 0.0, 1.0, 0.0, 0.0),
            hs(1.0, 1.0, 1.0, f64::NAN, 0.0, 0.0),
            hs(1.0, 1.0, 1.0, 1.0, -0.1, 0.0),
        ] {
            assert!(matches!(from_hansen_spies(&bad), Err(Error::ParameterDomain { .. })));
        }
    }

    #[test]
    fn conservative_validation() {
        let mut p = PhysicalParams::default();
        assert!(p.validate_conservative().is_ok());
        p.gamma = 0.0;
        assert_eq!(p.validate_conservative(), Err(Error::PhaseSpace));
        p.gamma = 1.0;
        p.beta = 0.1;
        assert!(p.validate_conservative().is_err());
        assert!(p.conservative().validate_conservative().is_ok());
    }

    #[test]
    fn transform_constant_slip() {
        let (w, xi, s) = transform_state(&[0.5], &[0.0], &[1.0]).unwrap();
        assert_eq!((w[0], xi[0], s[0]), (0.5, 3.0, -3.0));
        let (_, xi, s) = transform_state(&[0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!((xi[0], s[0]), (0.0, 0.0));
    }

    #[test]
    fn transform_shape_mismatch() {
        assert!(matches!(
            transform_state(&[0.0, 1.0], &[0.0], &[0.0, 0.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn transform_matrix_is_invertible() {
        let m = nalgebra::Matrix3::from_fn(|i, j| STATE_TRANSFORM[i][j]);
        assert!((m.determinant() - 3.0).abs() < 1e-14);
        // the pointwise map agrees with the coefficient matrix
        let (w, xi, s) = transform_state(&[0.3], &[-1.2], &[0.7]).unwrap();
        let v = m * nalgebra::Vector3::new(0.3, -1.2, 0.7);
        assert!((v[0] - w[0]).abs() < 1e-15 && (v[1] - xi[0]).abs() < 1e-15 && (v[2] - s[0]).abs() < 1e-15);
    }

    #[test]
    fn continuous_state_checks() {
        let st = ContinuousState::sample(
            8,
            1.0,
            [
                |x: f64| x,
                |x: f64| x * x,
                |x: f64| (x * 3.0).sin(),
                |x: f64| 2.0 * x,
                |x: f64| -x,
                |x: f64| x * (1.0 - x),
            ],
        );
        assert!(st.check(1e-14, true).is_ok());
        let mut bad = st.clone();
        bad.boundary_velocity[1] += 1.0;
        assert!(bad.check(1e-12, true).is_err());
        assert!(bad.check(1e-12, false).is_ok());
        let mut bad = st;
        bad.w[0] = 0.1;
        assert!(bad.check(1e-12, false).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hansen_spies_round_trip(
                rho in 0.1f64..10.0, i_rho in 0.1f64..10.0, g in 0.1f64..10.0,
                d in 0.1f64..10.0, delta0 in 0.0f64..10.0, gamma0 in 0.0f64..10.0,
            ) {
                let p = hs(rho, i_rho, g, d, delta0, gamma0);
                let back = to_hansen_spies(&from_hansen_spies(&p).unwrap()).unwrap();
                prop_assert_eq!(back.rho, p.rho);
                prop_assert_eq!(back.g, p.g);
                prop_assert!((back.delta0 - delta0).abs() <= 1e-15 * (1.0 + delta0));
                prop_assert!((back.gamma0 - gamma0).abs() <= 1e-15 * (1.0 + gamma0));
            }

            #[test]
            fn state_transform_round_trip(fields in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..20)) {
                let w: Vec<f64> = fields.iter().map(|f| f.0).collect();
                let psi: Vec<f64> = fields.iter().map(|f| f.1).collect();
                let slip: Vec<f64> = fields.iter().map(|f| f.2).collect();
                let (w2, xi, s) = transform_state(&w, &psi, &slip).unwrap();
                let (w3, psi3, slip3) = inverse_transform_state(&w2, &xi, &s).unwrap();
                prop_assert_eq!(w3, w);
                for j in 0..psi.len() {
                    prop_assert!((psi3[j] - psi[j]).abs() < 1e-12);
                    prop_assert!((slip3[j] - slip[j]).abs() < 1e-12);
                }
            }
        }
    }
}
