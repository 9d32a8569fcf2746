//! Combiner pairs `(A, B)` built as polynomials in the gossip matrix `W`.
//!
//! The admissible pairs are those with `A` symmetric, `A1 = 1`, `B ⪰ 0`,
//! `null(B) = span(1)` and `I - A² - B ⪰ 0`. The presets below cover NIDS/ED,
//! multi-gossip ED, ATC gradient tracking and multi-gossip SONATA; arbitrary
//! user pairs go through the same validation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::MixingMatrix;
use crate::linalg::{
    min_nonzero_of, psd_sqrt, range_solve_with, sym_eig, SpectralDecomposition, Stacked,
    SymMatrix, DEFAULT_NULL_TOL,
};

/// Tolerance for PSD conditions.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;
/// Tolerance for the exact algebraic identities (`A1 = 1`, commutation, ...).
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    /// `(I - c(I - W), c(I - W))`.
    Nids { c: f64 },
    /// `((I + W)/2, (I - W)/2)`.
    Ed,
    /// `((I + Wᴺ)/2, (I - Wᴺ)/2)`, `N` gossip rounds per combine.
    MgEd { rounds: u32 },
    /// `(W², (I - W)²)`.
    AtcGt,
    /// `(W²ᴺ, (I - Wᴺ)²)`.
    MgSonata { rounds: u32 },
    /// User-supplied matrices.
    Custom { comm_rounds: u32 },
}

impl Variant {
    /// Gossip rounds consumed by one combine step.
    pub fn comm_rounds(&self) -> u32 {
        match *self {
            Variant::Nids { .. } | Variant::Ed => 1,
            Variant::MgEd { rounds } => rounds,
            Variant::AtcGt => 2,
            Variant::MgSonata { rounds } => 2 * rounds,
            Variant::Custom { comm_rounds } => comm_rounds,
        }
    }

    fn requires_psd_mixing(&self) -> bool {
        matches!(
            self,
            Variant::MgEd { .. } | Variant::AtcGt | Variant::MgSonata { .. }
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Nids { c } => write!(f, "nids:c={c}"),
            Variant::Ed => write!(f, "ed"),
            Variant::MgEd { rounds } => write!(f, "mg_ed:N={rounds}"),
            Variant::AtcGt => write!(f, "atc_gt"),
            Variant::MgSonata { rounds } => write!(f, "mg_sonata:N={rounds}"),
            Variant::Custom { comm_rounds } => write!(f, "custom:N={comm_rounds}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Parses `"nids:c=0.5"`, `"ed"`, `"mg_ed:N=3"`, `"atc_gt"`, `"mg_sonata:N=2"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let bad = |msg: &str| Error::InvalidParameter(format!("combiner {s:?}: {msg}"));
        let param = |key: &str| -> Result<&str> {
            let arg = arg.ok_or_else(|| bad(&format!("missing {key}=<value>")))?;
            let (k, v) = arg
                .split_once('=')
                .ok_or_else(|| bad(&format!("expected {key}=<value>")))?;
            if k.trim() != key {
                return Err(bad(&format!("unknown parameter {:?}", k.trim())));
            }
            Ok(v.trim())
        };
        let rounds = |v: &str| -> Result<u32> {
            match v.parse::<u32>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(bad("N must be an integer >= 1")),
            }
        };
        let no_arg = |v: Variant| {
            if arg.is_some() {
                Err(bad("takes no parameters"))
            } else {
                Ok(v)
            }
        };
        match name {
            "nids" => {
                let c: f64 = param("c")?
                    .parse()
                    .map_err(|_| bad("c must be a real number"))?;
                Ok(Variant::Nids { c })
            }
            "ed" => no_arg(Variant::Ed),
            "mg_ed" => Ok(Variant::MgEd {
                rounds: rounds(param("N")?)?,
            }),
            "atc_gt" => no_arg(Variant::AtcGt),
            "mg_sonata" => Ok(Variant::MgSonata {
                rounds: rounds(param("N")?)?,
            }),
            _ => Err(bad("unknown variant")),
        }
    }
}

/// One admissibility condition with its measured value.
///
/// `margin >= 0` exactly when the condition holds; PSD conditions report the
/// minimum eigenvalue as the margin and pass down to `-tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "  [{}] {:<22} margin {:+.3e}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.margin
            )?;
        }
        Ok(())
    }
}

pub const COND_SYMMETRIC: &str = "A symmetric";
pub const COND_ROW_SUM: &str = "A1 = 1";
pub const COND_B_PSD: &str = "B psd";
pub const COND_B_ANNIHILATES_ONE: &str = "B1 = 0";
pub const COND_NULL_DIM: &str = "dim null(B) = 1";
pub const COND_SANDWICH: &str = "I - A^2 - B psd";
pub const COND_A_COMMUTES: &str = "AW = WA";
pub const COND_B_COMMUTES: &str = "BW = WB";

/// Checks every admissibility condition plus commutation with `w`. Never fails;
/// numerical trouble shows up as failed entries.
pub fn validate(a: &SymMatrix, b: &SymMatrix, w: &SymMatrix, psd_tol: f64) -> ValidationReport {
    let n = a.order();
    let mut conditions = Vec::with_capacity(8);
    let mut eq = |name, deviation: f64| {
        conditions.push(ConditionCheck {
            name,
            passed: deviation <= IDENTITY_TOL,
            margin: IDENTITY_TOL - deviation,
        })
    };

    let asym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - a.get(j, i)).abs())
        .fold(0.0, f64::max);
    eq(COND_SYMMETRIC, asym);
    eq(
        COND_ROW_SUM,
        a.row_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max),
    );
    eq(
        COND_B_ANNIHILATES_ONE,
        b.row_sums().iter().map(|s| s.abs()).fold(0.0, f64::max),
    );
    eq(COND_A_COMMUTES, commutator(a, w));
    eq(COND_B_COMMUTES, commutator(b, w));

    let psd = |name, m: Option<SymMatrix>| match m.map(|m| sym_eig(&m)) {
        Some(Ok(eig)) => {
            let min = eig.min_eigenvalue();
            (
                ConditionCheck {
                    name,
                    passed: min >= -psd_tol,
                    margin: min,
                },
                Some(eig),
            )
        }
        _ => (
            ConditionCheck {
                name,
                passed: false,
                margin: f64::NEG_INFINITY,
            },
            None,
        ),
    };

    let (b_psd, b_eig) = psd(COND_B_PSD, Some(b.clone()));
    let null_dim = b_eig.map(|eig| {
        let cut = DEFAULT_NULL_TOL * eig.max_eigenvalue().max(0.0);
        eig.eigenvalues.iter().filter(|&&l| l <= cut).count()
    });
    let sandwich = a
        .mul_sym(a)
        .and_then(|a2| SymMatrix::identity(n).lin_comb(1.0, &a2, -1.0))
        .and_then(|m| m.lin_comb(1.0, b, -1.0))
        .ok();
    let (sandwich, _) = psd(COND_SANDWICH, sandwich);

    conditions.push(b_psd);
    conditions.push(match null_dim {
        Some(dim) => ConditionCheck {
            name: COND_NULL_DIM,
            passed: dim == 1,
            margin: -((dim as f64) - 1.0).abs(),
        },
        None => ConditionCheck {
            name: COND_NULL_DIM,
            passed: false,
            margin: f64::NEG_INFINITY,
        },
    });
    conditions.push(sandwich);
    ValidationReport { conditions }
}

fn commutator(m: &SymMatrix, w: &SymMatrix) -> f64 {
    if m.order() != w.order() {
        return f64::INFINITY;
    }
    let mw = m.mul_raw(w).expect("same order");
    let wm = w.mul_raw(m).expect("same order");
    mw.iter()
        .zip(&wm)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(A, B)` matrices for a preset, without validation.
pub fn preset_matrices(variant: &Variant, w: &SymMatrix) -> Result<(SymMatrix, SymMatrix)> {
    let n = w.order();
    let id = SymMatrix::identity(n);
    let laplacian = id.lin_comb(1.0, w, -1.0)?;
    Ok(match *variant {
        Variant::Nids { c } => {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "nids requires c in (0, 1/2], got {c}"
                )));
            }
            (id.lin_comb(1.0, &laplacian, -c)?, laplacian.scale(c))
        }
        Variant::Ed => (id.lin_comb(0.5, w, 0.5)?, laplacian.scale(0.5)),
        Variant::MgEd { rounds } => {
            let wn = w.powi(check_rounds(rounds)?);
            (id.lin_comb(0.5, &wn, 0.5)?, id.lin_comb(0.5, &wn, -0.5)?)
        }
        Variant::AtcGt => (w.mul_sym(w)?, laplacian.mul_sym(&laplacian)?),
        Variant::MgSonata { rounds } => {
            let wn = w.powi(check_rounds(rounds)?);
            let lap_n = id.lin_comb(1.0, &wn, -1.0)?;
            (wn.mul_sym(&wn)?, lap_n.mul_sym(&lap_n)?)
        }
        Variant::Custom { .. } => {
            return Err(Error::InvalidParameter(
                "custom pairs are built with CombinerPair::custom".into(),
            ))
        }
    })
}

fn check_rounds(rounds: u32) -> Result<u32> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("gossip rounds N must be >= 1".into()));
    }
    Ok(rounds)
}

/// A validated combiner pair with cached spectral data.
#[derive(Clone, Debug)]
pub struct CombinerPair {
    variant: Variant,
    a: SymMatrix,
    b: SymMatrix,
    sqrt_b: SymMatrix,
    w: SymMatrix,
    b_eig: SpectralDecomposition,
    sigma_m_b: f64,
}

impl CombinerPair {
    /// Builds a preset pair. Any failed admissibility condition is returned as
    /// an error naming it; the multi-gossip and gradient-tracking presets
    /// additionally need `W ⪰ 0`.
    pub fn preset(variant: Variant, w: &MixingMatrix) -> Result<Self> {
        let (a, b) = preset_matrices(&variant, w.matrix())?;
        let pair = Self::from_parts(variant.clone(), a, b, w.matrix().clone())?;
        if variant.requires_psd_mixing() && !w.is_psd() {
            return Err(Error::MixingNotPsd {
                variant: variant.to_string(),
            });
        }
        Ok(pair)
    }

    /// User-supplied pair; always validated against `w`.
    pub fn custom(a: SymMatrix, b: SymMatrix, w: &MixingMatrix, comm_rounds: u32) -> Result<Self> {
        if a.order() != w.n() || b.order() != w.n() {
            return Err(Error::Dimension {
                expected: w.n(),
                found: if a.order() != w.n() { a.order() } else { b.order() },
            });
        }
        Self::from_parts(
            Variant::Custom {
                comm_rounds: check_rounds(comm_rounds)?,
            },
            a,
            b,
            w.matrix().clone(),
        )
    }

    fn from_parts(variant: Variant, a: SymMatrix, b: SymMatrix, w: SymMatrix) -> Result<Self> {
        let report = validate(&a, &b, &w, DEFAULT_PSD_TOL);
        if let Some(fail) = report.first_failure() {
            return Err(Error::Inadmissible {
                condition: fail.name.to_string(),
                margin: fail.margin,
            });
        }
        let b_eig = sym_eig(&b)?;
        let sigma_m_b = min_nonzero_of(&b_eig.eigenvalues, DEFAULT_NULL_TOL)?;
        if sigma_m_b <= 0.0 && b.order() > 1 {
            return Err(Error::Inadmissible {
                condition: COND_NULL_DIM.to_string(),
                margin: sigma_m_b,
            });
        }
        let sqrt_b = psd_sqrt(&b, DEFAULT_PSD_TOL)?;
        Ok(CombinerPair {
            variant,
            a,
            b,
            sqrt_b,
            w,
            b_eig,
            sigma_m_b,
        })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &SymMatrix {
        &self.b
    }

    pub fn sqrt_b(&self) -> &SymMatrix {
        &self.sqrt_b
    }

    pub fn mixing(&self) -> &SymMatrix {
        &self.w
    }

    pub fn n(&self) -> usize {
        self.a.order()
    }

    pub fn comm_rounds(&self) -> u32 {
        self.variant.comm_rounds()
    }

    /// Minimum nonzero eigenvalue of `B`; zero only for a single agent.
    pub fn sigma_m(&self) -> f64 {
        self.sigma_m_b
    }

    pub fn validate(&self, psd_tol: f64) -> ValidationReport {
        validate(&self.a, &self.b, &self.w, psd_tol)
    }

    /// Minimum-norm `u` with `(B ⊗ I) u = rhs`.
    pub fn solve_b(&self, rhs: &Stacked, tol: f64) -> Result<Stacked> {
        range_solve_with(&self.b_eig, rhs, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_topology, lazify, metropolis_weights, TopologyKind};

    fn ring(n: usize) -> MixingMatrix {
        metropolis_weights(&gen_topology(TopologyKind::Ring, n, 0).unwrap()).unwrap()
    }

    #[test]
    fn parse_and_display() {
        for s in ["nids:c=0.5", "ed", "mg_ed:N=3", "atc_gt", "mg_sonata:N=2"] {
            let v: Variant = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!("nids:c=0.25".parse::<Variant>().unwrap(), Variant::Nids { c: 0.25 });
        for bad in ["nids", "ed:N=2", "mg_ed:N=0", "mg_ed:M=2", "foo", "mg_sonata:N=x"] {
            assert!(bad.parse::<Variant>().is_err(), "{bad}");
        }
    }

    #[test]
    fn comm_rounds_per_variant() {
        assert_eq!(Variant::Nids { c: 0.3 }.comm_rounds(), 1);
        assert_eq!(Variant::Ed.comm_rounds(), 1);
        assert_eq!(Variant::MgEd { rounds: 3 }.comm_rounds(), 3);
        assert_eq!(Variant::AtcGt.comm_rounds(), 2);
        assert_eq!(Variant::MgSonata { rounds: 2 }.comm_rounds(), 4);
    }

    #[test]
    fn ed_on_ring4_sigma() {
        let pair = CombinerPair::preset(Variant::Ed, &ring(4)).unwrap();
        assert!((pair.sigma_m() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nids_half_is_ed() {
        let w = ring(6);
        let ed = CombinerPair::preset(Variant::Ed, &w).unwrap();
        let nids = CombinerPair::preset(Variant::Nids { c: 0.5 }, &w).unwrap();
        assert!(ed.a().lin_comb(1.0, nids.a(), -1.0).unwrap().max_abs() < 1e-15);
        assert!(ed.b().lin_comb(1.0, nids.b(), -1.0).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn atc_gt_sandwich_on_lazy_ring() {
        let lazy = lazify(&ring(4)).unwrap();
        let pair = CombinerPair::preset(Variant::AtcGt, &lazy).unwrap();
        let report = pair.validate(DEFAULT_PSD_TOL);
        // 1 - λ⁴ - (1-λ)² = λ(1-λ)(2+λ+λ²) at lazy eigenvalues {1/3, 2/3, 2/3, 1}
        let expected = [1.0 / 3.0, 2.0 / 3.0, 1.0]
            .iter()
            .map(|&l: &f64| l * (1.0 - l) * (2.0 + l + l * l))
            .fold(f64::INFINITY, f64::min);
        let got = report.get(COND_SANDWICH).unwrap().margin;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!(report.passed());
    }

    #[test]
    fn atc_gt_needs_psd_mixing() {
        let err = CombinerPair::preset(Variant::AtcGt, &ring(4)).unwrap_err();
        match err {
            Error::Inadmissible { condition, margin } => {
                assert_eq!(condition, COND_SANDWICH);
                assert!(margin < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nids_large_c_fails_sandwich() {
        let w = ring(4);
        let (a, b) = preset_matrices(&Variant::Nids { c: 0.9 }, w.matrix()).unwrap();
        let report = validate(&a, &b, w.matrix(), DEFAULT_PSD_TOL);
        // eigenvalue cμ(1 - cμ) with μ = 4/3 gives 1.2 * (1 - 1.2) = -0.24
        let m = report.get(COND_SANDWICH).unwrap();
        assert!(!m.passed);
        assert!((m.margin + 0.24).abs() < 1e-12);
        assert!(matches!(
            CombinerPair::preset(Variant::Nids { c: 0.9 }, &w),
            Err(Error::Inadmissible { .. })
        ));
        assert!(CombinerPair::preset(Variant::Nids { c: -0.1 }, &w).is_err());
    }

    #[test]
    fn zero_b_fails_null_dimension() {
        let w = ring(5);
        let report = validate(&SymMatrix::identity(5), &SymMatrix::zeros(5), w.matrix(), DEFAULT_PSD_TOL);
        let nd = report.get(COND_NULL_DIM).unwrap();
        assert!(!nd.passed);
        assert_eq!(nd.margin, -4.0);
        assert!(CombinerPair::custom(SymMatrix::identity(5), SymMatrix::zeros(5), &w, 1).is_err());
    }

    #[test]
    fn mg_ed_sigma_monotone_and_bounded() {
        let lazy = lazify(&ring(8)).unwrap();
        let sigmas: Vec<f64> = [1, 2, 4]
            .iter()
            .map(|&r| CombinerPair::preset(Variant::MgEd { rounds: r }, &lazy).unwrap().sigma_m())
            .collect();
        assert!(sigmas.windows(2).all(|s| s[0] <= s[1]));
        assert!(sigmas.iter().all(|&s| s <= 0.5));
    }

    #[test]
    fn atc_gt_complete3_sigma() {
        let w = metropolis_weights(&gen_topology(TopologyKind::Complete, 3, 0).unwrap()).unwrap();
        let pair = CombinerPair::preset(Variant::AtcGt, &lazify(&w).unwrap()).unwrap();
        assert!((pair.sigma_m() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn presets_commute() {
        let lazy = lazify(&ring(7)).unwrap();
        for v in [
            Variant::Nids { c: 0.3 },
            Variant::Ed,
            Variant::MgEd { rounds: 3 },
            Variant::AtcGt,
            Variant::MgSonata { rounds: 2 },
        ] {
            let pair = CombinerPair::preset(v, &lazy).unwrap();
            let ab = pair.a().mul_raw(pair.b()).unwrap();
            let ba = pair.b().mul_raw(pair.a()).unwrap();
            let dev = ab.iter().zip(&ba).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-10);
        }
    }

    #[test]
    fn custom_pair_accepts_valid_input() {
        let w = ring(5);
        let (a, b) = preset_matrices(&Variant::Nids { c: 0.4 }, w.matrix()).unwrap();
        let pair = CombinerPair::custom(a, b, &w, 1).unwrap();
        assert_eq!(pair.comm_rounds(), 1);
        assert!(pair.sigma_m() > 0.0);
    }

    #[test]
    fn single_agent_pair() {
        let w = MixingMatrix::from_matrix(SymMatrix::identity(1)).unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &w).unwrap();
        assert_eq!(pair.sigma_m(), 0.0);
        assert_eq!(pair.b().get(0, 0), 0.0);
    }
}
