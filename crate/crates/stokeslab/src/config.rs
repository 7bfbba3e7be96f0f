//! Input file schemas and the validation/numeric error split.
//!
//! Two JSON inputs exist: system definitions and probe specs. Both are
//! parsed with serde into plain structs here and converted into core
//! types on demand, in either coefficient mode. Every f64 is an exact
//! dyadic rational, so the rational-mode conversion loses nothing.

use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use stokeslab_core::coeff::{CRat, Coeff};
use stokeslab_core::error::Error as CoreError;
use stokeslab_core::odesys::OdeSystem;
use stokeslab_core::poly::MultiPoly;
use stokeslab_core::probes::{ProbeMode, SimpleFunctionSpec};
use stokeslab_core::series::TruncatedSeries;

/// Failures split by exit code: validation problems exit 2, numeric
/// problems exit 3.
#[derive(Debug, Clone)]
pub enum CliError {
    Validation(String),
    Numeric(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let msg = e.to_string();
        match e {
            // Structural problems with the request or its inputs.
            ComposeConstantTerm
            | JetBeyondOrder { .. }
            | DimensionMismatch { .. }
            | SingularLinearPart
            | NonzeroConstantTerm
            | TooFewCoefficients { .. }
            | MissingDirection { .. }
            | DegreeBoundViolated { .. }
            | DuplicatePolynomials { .. }
            | NonpositiveLeading { .. }
            | InsufficientOrder { .. }
            | ExactUnrepresentable => CliError::Validation(msg),
            // Failures of the computation itself.
            DivisibilityFailure { .. }
            | DegenerateTable
            | PoleOnRay { .. }
            | NonDecayingIntegrand
            | QuadratureStall { .. }
            | OutOfSector
            | FitDiverged
            | InconsistentSamples { .. }
            | BlowUp { .. }
            | StepUnderflow { .. }
            | ZeroSample { .. }
            | UndersampledArc { .. }
            | RangeExceeded { .. } => CliError::Numeric(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One monomial of a right-hand side component.
#[derive(Debug, Clone, Deserialize)]
pub struct TermEntry {
    pub x_exp: u32,
    pub y_exps: Vec<u32>,
    /// Component of `A` the term belongs to; omitted means 0, which is
    /// the only choice for scalar systems.
    #[serde(default)]
    pub component: usize,
    pub coeff: [f64; 2],
}

/// A system definition file.
#[derive(Debug, Clone, Deserialize)]
pub struct SystemFile {
    #[serde(default)]
    pub name: Option<String>,
    pub p: u32,
    pub r: usize,
    pub terms: Vec<TermEntry>,
}

impl SystemFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let file: SystemFile = serde_json::from_str(text)
            .map_err(|e| CliError::validation(format!("{origin}: {e}")))?;
        file.check(origin)?;
        Ok(file)
    }

    fn check(&self, origin: &str) -> CliResult<()> {
        if self.p < 1 {
            return Err(CliError::validation(format!(
                "{origin}: p must be at least 1"
            )));
        }
        if self.r < 1 || self.r > 8 {
            return Err(CliError::validation(format!(
                "{origin}: r must be in 1..=8"
            )));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.y_exps.len() != self.r {
                return Err(CliError::validation(format!(
                    "{origin}: term {i} has {} y exponents, system has r = {}",
                    t.y_exps.len(),
                    self.r
                )));
            }
            if t.component >= self.r {
                return Err(CliError::validation(format!(
                    "{origin}: term {i} addresses component {}, system has r = {}",
                    t.component, self.r
                )));
            }
            if !(t.coeff[0].is_finite() && t.coeff[1].is_finite()) {
                return Err(CliError::validation(format!(
                    "{origin}: term {i} has a non-finite coefficient"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "system".to_owned())
    }

    fn to_system<C: Coeff>(&self) -> CliResult<OdeSystem<C>> {
        let mut rhs = vec![MultiPoly::zero(1 + self.r); self.r];
        for t in &self.terms {
            let mut e = Vec::with_capacity(1 + self.r);
            e.push(t.x_exp);
            e.extend_from_slice(&t.y_exps);
            let c = C::from_c64(C64::new(t.coeff[0], t.coeff[1]));
            rhs[t.component].add_term(e, c);
        }
        Ok(OdeSystem::new(self.p, rhs)?)
    }

    pub fn to_c64(&self) -> CliResult<OdeSystem<C64>> {
        self.to_system()
    }

    pub fn to_rational(&self) -> CliResult<OdeSystem<CRat>> {
        self.to_system()
    }
}

/// One monomial of a probe's simple function, over `(x, z_11 .. z_rn)`.
#[derive(Debug, Clone, Deserialize)]
pub struct FTermEntry {
    pub exps: Vec<u32>,
    pub coeff: [f64; 2],
}

/// A probe spec file.
#[derive(Debug, Clone, Deserialize)]
pub struct ProbeSpecFile {
    pub f_terms: Vec<FTermEntry>,
    /// Ascending coefficients from the constant term, one array per
    /// polynomial.
    pub polynomials: Vec<Vec<f64>>,
    pub k: usize,
    pub mode: String,
}

impl ProbeSpecFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let file: ProbeSpecFile = serde_json::from_str(text)
            .map_err(|e| CliError::validation(format!("{origin}: {e}")))?;
        file.check(origin)?;
        Ok(file)
    }

    fn check(&self, origin: &str) -> CliResult<()> {
        self.mode(origin)?;
        if self.polynomials.is_empty() {
            return Err(CliError::validation(format!(
                "{origin}: at least one polynomial is required"
            )));
        }
        for (l, poly) in self.polynomials.iter().enumerate() {
            if poly.iter().any(|c| !c.is_finite()) {
                return Err(CliError::validation(format!(
                    "{origin}: polynomial {l} has a non-finite coefficient"
                )));
            }
        }
        for (i, t) in self.f_terms.iter().enumerate() {
            if !(t.coeff[0].is_finite() && t.coeff[1].is_finite()) {
                return Err(CliError::validation(format!(
                    "{origin}: f term {i} has a non-finite coefficient"
                )));
            }
        }
        Ok(())
    }

    pub fn mode(&self, origin: &str) -> CliResult<ProbeMode> {
        match self.mode.as_str() {
            "SQA" => Ok(ProbeMode::Sqa),
            "SAT" => Ok(ProbeMode::Sat),
            other => Err(CliError::validation(format!(
                "{origin}: mode must be \"SQA\" or \"SAT\", got \"{other}\""
            ))),
        }
    }

    /// Builds the spec for a system of dimension `r`, checking that the
    /// f exponents address exactly the variables `(x, z_11 .. z_rn)`.
    pub fn to_spec<C: Coeff>(
        &self,
        r: usize,
        origin: &str,
    ) -> CliResult<SimpleFunctionSpec<C>> {
        let nvars = 1 + r * self.polynomials.len();
        let mut f = MultiPoly::zero(nvars);
        for (i, t) in self.f_terms.iter().enumerate() {
            if t.exps.len() != nvars {
                return Err(CliError::validation(format!(
                    "{origin}: f term {i} has {} exponents, expected {} \
                     (x plus {} tail variables)",
                    t.exps.len(),
                    nvars,
                    nvars - 1
                )));
            }
            if t.exps.iter().all(|&e| e == 0) {
                return Err(CliError::validation(format!(
                    "{origin}: f term {i} is a constant; f(0) must vanish"
                )));
            }
            f.add_term(t.exps.clone(), C::from_c64(C64::new(t.coeff[0], t.coeff[1])));
        }
        let polys = self
            .polynomials
            .iter()
            .map(|coeffs| {
                let order = coeffs.len().saturating_sub(1);
                let mut s = TruncatedSeries::zero(order);
                for (n, &c) in coeffs.iter().enumerate() {
                    *s.coeff_mut(n) = C::from_c64(C64::from(c));
                }
                s
            })
            .collect();
        Ok(SimpleFunctionSpec::new(f, polys, r, self.k))
    }
}

/// Option overrides loaded from `--config`; any field present replaces
/// the corresponding flag or default.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct OverrideFile {
    pub order: Option<usize>,
    pub tol: Option<f64>,
    pub theta: Option<f64>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

impl OverrideFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_parse_matches_bundled_euler() {
        let text = include_str!("../configs/euler.json");
        let file = SystemFile::parse(text, "euler.json").unwrap();
        assert_eq!(file.p, 1);
        assert_eq!(file.r, 1);
        let sys = file.to_c64().unwrap();
        let reference = stokeslab_core::odesys::standard::euler::<C64>();
        assert_eq!(sys.components(), reference.components());
    }

    #[test]
    fn all_bundled_systems_match_standard() {
        let cases: [(&str, OdeSystem<C64>); 5] = [
            (
                include_str!("../configs/euler.json"),
                stokeslab_core::odesys::standard::euler(),
            ),
            (
                include_str!("../configs/euler2d.json"),
                stokeslab_core::odesys::standard::euler2d(),
            ),
            (
                include_str!("../configs/euler_pair.json"),
                stokeslab_core::odesys::standard::euler_pair(),
            ),
            (
                include_str!("../configs/odd_pump.json"),
                stokeslab_core::odesys::standard::odd_pump(),
            ),
            (
                include_str!("../configs/convergent.json"),
                stokeslab_core::odesys::standard::convergent_geometric(),
            ),
        ];
        for (text, reference) in cases {
            let sys = SystemFile::parse(text, "bundled").unwrap().to_c64().unwrap();
            assert_eq!(sys.p(), reference.p());
            assert_eq!(sys.components(), reference.components());
        }
    }

    #[test]
    fn bad_component_index_is_rejected() {
        let text = r#"{"p":1,"r":1,"terms":[
            {"x_exp":0,"y_exps":[1],"component":3,"coeff":[1.0,0.0]}]}"#;
        let err = SystemFile::parse(text, "t").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.message().contains("component 3"));
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let text = r#"{"p":1,"r":2,"terms":[
            {"x_exp":0,"y_exps":[1],"coeff":[1.0,0.0]}]}"#;
        let err = SystemFile::parse(text, "t").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn probe_spec_round_trips() {
        let text = r#"{
            "f_terms": [{"exps": [0, 1, 0], "coeff": [1.0, 0.0]},
                        {"exps": [0, 0, 1], "coeff": [-1.0, 0.0]}],
            "polynomials": [[0.0, 1.0], [0.0, 2.0]],
            "k": 0,
            "mode": "SAT"
        }"#;
        let file = ProbeSpecFile::parse(text, "t").unwrap();
        assert_eq!(file.mode("t").unwrap(), ProbeMode::Sat);
        let spec = file.to_spec::<C64>(1, "t").unwrap();
        assert_eq!(spec.n(), 2);
        assert_eq!(spec.k(), 0);
        assert_eq!(spec.polynomials()[0].coeff(1), C64::from(1.0));
        assert_eq!(spec.polynomials()[1].coeff(1), C64::from(2.0));
    }

    #[test]
    fn probe_spec_rejects_bad_mode_and_constant_term() {
        let bad_mode = r#"{"f_terms": [], "polynomials": [[0.0, 1.0]],
                           "k": 0, "mode": "maybe"}"#;
        assert_eq!(
            ProbeSpecFile::parse(bad_mode, "t").unwrap_err().exit_code(),
            2
        );
        let constant = r#"{"f_terms": [{"exps": [0, 0], "coeff": [1.0, 0.0]}],
                          "polynomials": [[0.0, 1.0]], "k": 0, "mode": "SQA"}"#;
        let file = ProbeSpecFile::parse(constant, "t").unwrap();
        assert_eq!(file.to_spec::<C64>(1, "t").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn error_classification_matches_exit_codes() {
        let v: CliError = CoreError::SingularLinearPart.into();
        assert_eq!(v.exit_code(), 2);
        let n: CliError = CoreError::BlowUp { x: 0.1, norm: 11.0 }.into();
        assert_eq!(n.exit_code(), 3);
    }
}
