//! Material response at imaginary frequency and Fresnel reflection.
//!
//! Permittivities are evaluated on the imaginary frequency axis, ε(iξ), where
//! all supported models are real, ≥ 1 and monotonically decreasing in ξ.  The
//! Fresnel coefficients are taken in the imaginary-frequency kinematics where
//! the cosine of the incidence angle, cos θ = cκ/ξ, is ≥ 1; the combination
//! ε - sin²θ = ε - 1 + c²κ²/ξ² stays positive and the coefficients real.
//!
//! The zero-frequency limit needs per-material branches: the TE reflection
//! coefficient vanishes for metals with finite dc conductivity (Drude) and for
//! dielectrics, stays finite for the plasma model, and equals -1 for a
//! perfect reflector.

use crate::constants::SPEED_OF_LIGHT;
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Dielectric response model ε(iξ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DielectricModel {
    /// ε = ∞ at all frequencies.
    PerfectReflector,
    /// ε(iξ) = 1 + ω_p²/ξ².
    Plasma { plasma_frequency: f64 },
    /// ε(iξ) = 1 + ω_p²/(ξ(ξ+γ)).
    Drude {
        plasma_frequency: f64,
        relaxation_rate: f64,
    },
    /// Frequency-independent ε ≥ 1.
    Dielectric { eps0: f64 },
}

/// Fresnel reflection coefficients for the two polarizations.
///
/// For ε ≥ 1 on the imaginary axis, -1 ≤ r_te ≤ 0 ≤ r_tm ≤ 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FresnelPair {
    pub r_te: f64,
    pub r_tm: f64,
}

impl DielectricModel {
    /// Checks the parameter-range invariants.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DielectricModel::PerfectReflector => Ok(()),
            DielectricModel::Plasma { plasma_frequency } => {
                if plasma_frequency > 0.0 && plasma_frequency.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("plasma frequency must be positive"))
                }
            }
            DielectricModel::Drude {
                plasma_frequency,
                relaxation_rate,
            } => {
                if plasma_frequency > 0.0
                    && relaxation_rate > 0.0
                    && plasma_frequency.is_finite()
                    && relaxation_rate.is_finite()
                {
                    Ok(())
                } else {
                    Err(Error::domain(
                        "Drude parameters must be positive and finite",
                    ))
                }
            }
            DielectricModel::Dielectric { eps0 } => {
                if eps0 >= 1.0 && eps0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("dielectric constant must satisfy eps0 >= 1"))
                }
            }
        }
    }

    pub fn is_perfect_reflector(&self) -> bool {
        matches!(self, DielectricModel::PerfectReflector)
    }
}

/// Permittivity ε(iξ) for ξ > 0.
///
/// Returns `f64::INFINITY` for the perfect reflector; downstream code treats
/// that marker via dedicated branches rather than arithmetic.
pub fn permittivity(model: &DielectricModel, xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!(
            "permittivity requires xi > 0, got {xi}"
        )));
    }
    model.validate()?;
    Ok(match *model {
        DielectricModel::PerfectReflector => f64::INFINITY,
        DielectricModel::Plasma { plasma_frequency } => {
            1.0 + (plasma_frequency / xi) * (plasma_frequency / xi)
        }
        DielectricModel::Drude {
            plasma_frequency,
            relaxation_rate,
        } => 1.0 + plasma_frequency * plasma_frequency / (xi * (xi + relaxation_rate)),
        DielectricModel::Dielectric { eps0 } => eps0,
    })
}

/// Fresnel coefficients at imaginary frequency ξ > 0 and axial wavenumber
/// κ ≥ ξ/c, evaluated in the algebraic form
///
/// ```text
/// r_te = (q - √(ε-1+q²)) / (q + √(ε-1+q²)),   q = cκ/ξ = cos θ ≥ 1,
/// r_tm = (εq - √(ε-1+q²)) / (εq + √(ε-1+q²)).
/// ```
pub fn fresnel(model: &DielectricModel, xi: f64, kappa: f64) -> Result<FresnelPair> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!("fresnel requires xi > 0, got {xi}")));
    }
    let q = SPEED_OF_LIGHT * kappa / xi;
    if q < 1.0 - 1e-12 {
        return Err(Error::domain(format!(
            "fresnel requires kappa >= xi/c (got cos theta = {q})"
        )));
    }
    let q = q.max(1.0);
    if model.is_perfect_reflector() {
        return Ok(FresnelPair {
            r_te: -1.0,
            r_tm: 1.0,
        });
    }
    let eps = permittivity(model, xi)?;
    Ok(fresnel_from_eps(eps, q))
}

/// Zero-frequency Fresnel coefficients; the branches follow the low-frequency
/// behaviour of each model rather than a naive ξ → 0 substitution.
pub fn fresnel_zero_freq(model: &DielectricModel, kappa: f64) -> Result<FresnelPair> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!(
            "fresnel_zero_freq requires kappa > 0, got {kappa}"
        )));
    }
    model.validate()?;
    Ok(match *model {
        DielectricModel::PerfectReflector => FresnelPair {
            r_te: -1.0,
            r_tm: 1.0,
        },
        // Finite dc conductivity: the TE coefficient vanishes, TM saturates.
        DielectricModel::Drude { .. } => FresnelPair {
            r_te: 0.0,
            r_tm: 1.0,
        },
        DielectricModel::Plasma { plasma_frequency } => {
            let kp = plasma_frequency / SPEED_OF_LIGHT;
            let root = kappa.hypot(kp);
            FresnelPair {
                r_te: (kappa - root) / (kappa + root),
                r_tm: 1.0,
            }
        }
        DielectricModel::Dielectric { eps0 } => FresnelPair {
            r_te: 0.0,
            r_tm: (eps0 - 1.0) / (eps0 + 1.0),
        },
    })
}

/// Dispatches between the finite- and zero-frequency branches.  Used by the
/// WKB and saddle-point paths, where the frequency may be exactly zero.
pub(crate) fn fresnel_at(model: &DielectricModel, xi: f64, kappa: f64) -> Result<FresnelPair> {
    if xi == 0.0 {
        fresnel_zero_freq(model, kappa)
    } else {
        fresnel(model, xi, kappa)
    }
}

fn fresnel_from_eps(eps: f64, q: f64) -> FresnelPair {
    let root = (eps - 1.0 + q * q).sqrt();
    FresnelPair {
        r_te: (q - root) / (q + root),
        r_tm: (eps * q - root) / (eps * q + root),
    }
}

impl fmt::Display for DielectricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DielectricModel::PerfectReflector => write!(f, "perfect"),
            DielectricModel::Plasma { plasma_frequency } => {
                write!(f, "plasma:{plasma_frequency:e}")
            }
            DielectricModel::Drude {
                plasma_frequency,
                relaxation_rate,
            } => write!(f, "drude:{plasma_frequency:e}:{relaxation_rate:e}"),
            DielectricModel::Dielectric { eps0 } => write!(f, "dielectric:{eps0}"),
        }
    }
}

impl FromStr for DielectricModel {
    type Err = Error;

    /// Parses the CLI material syntax: `perfect`, `plasma:<omega_p_rad_s>`,
    /// `drude:<omega_p>:<gamma>`, `dielectric:<eps0>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::domain(format!("invalid number '{v}' in material spec '{s}'")))
        };
        let model = match parts.as_slice() {
            ["perfect"] => DielectricModel::PerfectReflector,
            ["plasma", wp] => DielectricModel::Plasma {
                plasma_frequency: parse(wp)?,
            },
            ["drude", wp, g] => DielectricModel::Drude {
                plasma_frequency: parse(wp)?,
                relaxation_rate: parse(g)?,
            },
            ["dielectric", e] => DielectricModel::Dielectric { eps0: parse(e)? },
            _ => {
                return Err(Error::domain(format!(
                    "unknown material spec '{s}' (expected perfect | plasma:<wp> | drude:<wp>:<gamma> | dielectric:<eps0>)"
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: f64 = SPEED_OF_LIGHT;

    #[test]
    fn permittivity_constant_and_substitutions() {
        let diel = DielectricModel::Dielectric { eps0: 2.0 };
        assert_eq!(permittivity(&diel, 1.0e15).unwrap(), 2.0);
        assert_eq!(permittivity(&diel, 3.0e12).unwrap(), 2.0);

        // Drude with gamma = xi = omega_p: 1 + wp^2/(xi·2xi) = 1.5.
        let xi = 2.0e14;
        let drude = DielectricModel::Drude {
            plasma_frequency: xi,
            relaxation_rate: xi,
        };
        assert!((permittivity(&drude, xi).unwrap() - 1.5).abs() < 1e-15);

        // Plasma at xi = omega_p: 1 + 1 = 2.
        let plasma = DielectricModel::Plasma {
            plasma_frequency: xi,
        };
        assert!((permittivity(&plasma, xi).unwrap() - 2.0).abs() < 1e-15);

        assert!(permittivity(&plasma, 0.0).is_err());
        assert!(permittivity(&plasma, -1.0).is_err());
    }

    #[test]
    fn fresnel_perfect_reflector_and_vacuum() {
        let pr = DielectricModel::PerfectReflector;
        for (xi, kappa) in [(1.0e13, 1.0e5), (5.0e15, 1.0e8)] {
            let f = fresnel(&pr, xi, kappa).unwrap();
            assert_eq!(f.r_te, -1.0);
            assert_eq!(f.r_tm, 1.0);
        }
        let vac = DielectricModel::Dielectric { eps0: 1.0 };
        let f = fresnel(&vac, 1.0e14, 1.0e6).unwrap();
        assert_eq!(f.r_te, 0.0);
        assert_eq!(f.r_tm, 0.0);
    }

    #[test]
    fn fresnel_dielectric_reference_value() {
        // xi/c = 1, kappa = 2, eps = 2: r_te = (2-sqrt5)/(2+sqrt5).
        let model = DielectricModel::Dielectric { eps0: 2.0 };
        let f = fresnel(&model, C, 2.0).unwrap();
        let expected = (2.0 - 5.0_f64.sqrt()) / (2.0 + 5.0_f64.sqrt());
        assert!((f.r_te - expected).abs() < 1e-15, "r_te = {}", f.r_te);
        assert!((f.r_te + 0.0557281).abs() < 1e-7);
        // TM analogue with eps-weighted cosine.
        let expected_tm = (4.0 - 5.0_f64.sqrt()) / (4.0 + 5.0_f64.sqrt());
        assert!((f.r_tm - expected_tm).abs() < 1e-15);
    }

    #[test]
    fn fresnel_rejects_kappa_below_light_cone() {
        let model = DielectricModel::Dielectric { eps0: 2.0 };
        assert!(fresnel(&model, C, 0.5).is_err());
    }

    #[test]
    fn zero_frequency_branches() {
        let drude = DielectricModel::Drude {
            plasma_frequency: 1.0e16,
            relaxation_rate: 1.0e13,
        };
        let f = fresnel_zero_freq(&drude, 1.0e6).unwrap();
        assert_eq!(f.r_te, 0.0);
        assert_eq!(f.r_tm, 1.0);

        let diel = DielectricModel::Dielectric { eps0: 3.0 };
        let f = fresnel_zero_freq(&diel, 1.0e6).unwrap();
        assert_eq!(f.r_te, 0.0);
        assert!((f.r_tm - 0.5).abs() < 1e-15);

        // Plasma closed form, and the perfect-reflector limit at large omega_p.
        let kappa = 1.0e6;
        let plasma = DielectricModel::Plasma {
            plasma_frequency: 1.0e16,
        };
        let f = fresnel_zero_freq(&plasma, kappa).unwrap();
        let kp = 1.0e16 / C;
        let expect = (kappa - kappa.hypot(kp)) / (kappa + kappa.hypot(kp));
        assert!((f.r_te - expect).abs() < 1e-15);
        let huge = DielectricModel::Plasma {
            plasma_frequency: 1.0e30,
        };
        let f = fresnel_zero_freq(&huge, kappa).unwrap();
        assert!((f.r_te + 1.0).abs() < 1e-10);
        assert_eq!(f.r_tm, 1.0);

        assert!(fresnel_zero_freq(&plasma, 0.0).is_err());
    }

    #[test]
    fn finite_frequency_limits_to_zero_frequency_branch() {
        // fresnel(model, xi, kappa) -> fresnel_zero_freq(model, kappa) as
        // xi -> 0, checked at xi = 1e-6·c·kappa.
        let kappa = 3.0e6;
        let xi = 1e-6 * C * kappa;
        let cases = [
            DielectricModel::PerfectReflector,
            DielectricModel::Plasma {
                plasma_frequency: 1.3e16,
            },
            DielectricModel::Dielectric { eps0: 4.0 },
        ];
        for model in cases {
            let f = fresnel(&model, xi, kappa).unwrap();
            let f0 = fresnel_zero_freq(&model, kappa).unwrap();
            if f0.r_te != 0.0 {
                assert!(
                    (f.r_te / f0.r_te - 1.0).abs() < 1e-4,
                    "{model}: {} vs {}",
                    f.r_te,
                    f0.r_te
                );
            }
            assert!((f.r_tm / f0.r_tm - 1.0).abs() < 1e-4, "{model}");
        }
        // Drude TE tends to the exact zero of the dc-conductivity branch.
        let drude = DielectricModel::Drude {
            plasma_frequency: 1.3e16,
            relaxation_rate: 5.0e13,
        };
        let f = fresnel(&drude, xi, kappa).unwrap();
        assert!(f.r_te.abs() < 1e-3);
        assert!((f.r_tm - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn permittivity_is_monotone_decreasing(
            wp in 1.0e13f64..1.0e17,
            gamma in 1.0e12f64..1.0e15,
            xi in 1.0e12f64..1.0e16,
            factor in 1.01f64..100.0,
        ) {
            for model in [
                DielectricModel::Plasma { plasma_frequency: wp },
                DielectricModel::Drude { plasma_frequency: wp, relaxation_rate: gamma },
            ] {
                let lo = permittivity(&model, xi).unwrap();
                let hi = permittivity(&model, xi * factor).unwrap();
                prop_assert!(lo >= 1.0 && hi >= 1.0);
                prop_assert!(hi < lo);
            }
            let diel = DielectricModel::Dielectric { eps0: 4.0 };
            prop_assert_eq!(
                permittivity(&diel, xi).unwrap(),
                permittivity(&diel, xi * factor).unwrap()
            );
        }

        #[test]
        fn fresnel_signs_and_bounds(
            eps0 in 1.0f64..1.0e6,
            q in prop::num::f64::POSITIVE.prop_map(|v| 1.0 + (v % 1.0e4).abs()),
        ) {
            let f = fresnel_from_eps(eps0, q);
            prop_assert!((-1.0..=0.0).contains(&f.r_te));
            prop_assert!((0.0..=1.0).contains(&f.r_tm));
        }

        #[test]
        fn magnitudes_are_monotone_in_kappa(
            eps0 in 1.001f64..100.0,
            q1 in 1.0f64..100.0,
            dq in 0.01f64..100.0,
        ) {
            // At fixed xi and constant eps, |r_te| falls with kappa while
            // r_tm rises toward its grazing limit (eps-1)/(eps+1).
            let f1 = fresnel_from_eps(eps0, q1);
            let f2 = fresnel_from_eps(eps0, q1 + dq);
            prop_assert!(f2.r_te.abs() <= f1.r_te.abs() * (1.0 + 1e-12));
            prop_assert!(f2.r_tm >= f1.r_tm * (1.0 - 1e-12));
            prop_assert!(f2.r_tm <= (eps0 - 1.0) / (eps0 + 1.0) + 1e-12);
        }
    }

    #[test]
    fn parses_cli_material_specs() {
        assert_eq!(
            "perfect".parse::<DielectricModel>().unwrap(),
            DielectricModel::PerfectReflector
        );
        assert_eq!(
            "plasma:1.37e16".parse::<DielectricModel>().unwrap(),
            DielectricModel::Plasma {
                plasma_frequency: 1.37e16
            }
        );
        assert_eq!(
            "drude:1.37e16:5.3e13".parse::<DielectricModel>().unwrap(),
            DielectricModel::Drude {
                plasma_frequency: 1.37e16,
                relaxation_rate: 5.3e13
            }
        );
        assert_eq!(
            "dielectric:2.5".parse::<DielectricModel>().unwrap(),
            DielectricModel::Dielectric { eps0: 2.5 }
        );
        assert!("metal".parse::<DielectricModel>().is_err());
        assert!("dielectric:0.5".parse::<DielectricModel>().is_err());
        assert!("drude:1e16".parse::<DielectricModel>().is_err());
    }
}
