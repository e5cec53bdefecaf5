//! TOML problem files.
//!
//! ```toml
//! name = "poincare"
//! dim = [1, 1]          # n, m
//! p = 2
//! omega = [[-1, 1]]     # one interval per x axis
//! boundary = "free"     # or "dirichlet"
//! f = "z^2"
//! a = ["y", "y^2"]
//! b = ["0", "0"]
//! rhs = [0, 1]
//! ```
//!
//! Numbers may be written as TOML integers, floats, or strings such as
//! `"sqrt(2)/2"`. Optional `[grid]`, `[pdr]`, `[fem]`, `[sharp]` and
//! `[oracle]` sections carry solver settings. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{dirichlet_constraint, BoundaryKind, BoxDomain, VariationalProblem};
use crate::error::{Error, Result};
use crate::poly::{parse_polynomial, Polynomial, VarLayout};
use crate::scalar::Scalar;

/// A number written as integer, float or expression string.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum NumberText {
    Int(i64),
    Float(f64),
    Text(String),
}

impl NumberText {
    pub fn to_scalar<S: Scalar>(&self) -> Result<S> {
        match self {
            NumberText::Int(v) => Ok(S::from_i64(*v)),
            NumberText::Float(v) => parse_scalar(&format!("{v:?}")),
            NumberText::Text(t) => parse_scalar(t),
        }
    }
}

/// Parses a constant expression such as `-3/4`, `0.5` or `sqrt(2)/2`.
pub fn parse_scalar<S: Scalar>(text: &str) -> Result<S> {
    let p: Polynomial<S> = parse_polynomial(text, VarLayout::new(1, 1))?;
    if p.terms().any(|(m, _)| !m.is_constant()) {
        return Err(Error::Parse(format!("expected a constant, got {text:?}")));
    }
    Ok(p.constant_term())
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: Option<Vec<usize>>,
    pub gauss: Option<usize>,
    pub radius: Option<NumberText>,
    pub amplitude: Option<f64>,
    pub y_nodes: Option<usize>,
    pub z_nodes: Option<usize>,
    pub y_special: Option<Vec<Vec<NumberText>>>,
    pub z_special: Option<Vec<Vec<NumberText>>>,
    pub support_tol: Option<f64>,
    pub phi_degree: Option<u32>,
    pub h_degree: Option<u32>,
    pub basis: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PdrSection {
    pub phi_degree: Option<u32>,
    pub h_degree: Option<u32>,
    pub l_degree: Option<u32>,
    pub ansatz: Option<String>,
    pub x_nodes: Option<usize>,
    pub y_nodes: Option<usize>,
    pub z_nodes: Option<usize>,
    pub radius: Option<f64>,
    pub exchange_rounds: Option<usize>,
    pub verify_samples: Option<usize>,
    pub regularize: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FemSection {
    pub elements: Option<Vec<usize>>,
    pub multistart: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub refinements: Option<Vec<usize>>,
    pub init_amplitude: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SharpSection {
    pub x_nodes: Option<usize>,
    pub conj_nodes: Option<usize>,
    pub z_range: Option<f64>,
    pub y_range: Option<f64>,
    pub fit_degree: Option<usize>,
    pub convexify: Option<bool>,
    pub max_iter: Option<usize>,
    pub smooth: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub f_star: Option<f64>,
    pub note: Option<String>,
}

/// Raw contents of a problem file, before polynomials are parsed.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    pub dim: [usize; 2],
    pub p: f64,
    pub omega: Vec<[NumberText; 2]>,
    #[serde(default)]
    pub boundary: Option<String>,
    pub f: String,
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default)]
    pub a: Vec<String>,
    #[serde(default)]
    pub b: Vec<String>,
    #[serde(default)]
    pub rhs: Vec<NumberText>,
    #[serde(default)]
    pub c: Option<String>,
    #[serde(default)]
    pub d: Option<String>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub pdr: PdrSection,
    #[serde(default)]
    pub fem: FemSection,
    #[serde(default)]
    pub sharp: SharpSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(skip)]
    pub source: Option<PathBuf>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn layout(&self) -> VarLayout {
        VarLayout::new(self.dim[0], self.dim[1])
    }

    /// Parses every polynomial and validates the resulting problem.
    pub fn build<S: Scalar>(&self) -> Result<VariationalProblem<S>> {
        let [n, m] = self.dim;
        if n == 0 || m == 0 {
            return Err(Error::Invalid("dim entries must be positive".into()));
        }
        if self.omega.len() != n {
            return Err(Error::Dimension(format!("omega has {} intervals, expected n = {n}", self.omega.len())));
        }
        let layout = self.layout();
        let bounds = self
            .omega
            .iter()
            .map(|[lo, hi]| Ok((lo.to_scalar::<S>()?, hi.to_scalar::<S>()?)))
            .collect::<Result<Vec<_>>>()?;
        let omega = BoxDomain::new(bounds)?;
        let poly = |label: &str, text: &str| -> Result<Polynomial<S>> {
            parse_polynomial(text, layout).map_err(|e| Error::Parse(format!("field {label}: {e}")))
        };
        let boundary = match self.boundary.as_deref() {
            None | Some("free") => BoundaryKind::Free,
            Some("dirichlet") => BoundaryKind::Dirichlet,
            Some(other) => return Err(Error::Invalid(format!("unknown boundary kind {other:?}"))),
        };
        let d = match (&self.d, boundary) {
            (Some(text), _) => poly("d", text)?,
            (None, BoundaryKind::Dirichlet) => dirichlet_constraint(layout),
            (None, BoundaryKind::Free) => Polynomial::zero(layout),
        };
        let problem = VariationalProblem {
            name: self.name.clone(),
            layout,
            p: self.p,
            omega,
            f: poly("f", &self.f)?,
            g: self.g.as_deref().map(|t| poly("g", t)).transpose()?.unwrap_or_else(|| Polynomial::zero(layout)),
            a: self.a.iter().map(|t| poly("a", t)).collect::<Result<_>>()?,
            b: self.b.iter().map(|t| poly("b", t)).collect::<Result<_>>()?,
            rhs: self.rhs.iter().map(NumberText::to_scalar).collect::<Result<_>>()?,
            c: self.c.as_deref().map(|t| poly("c", t)).transpose()?.unwrap_or_else(|| Polynomial::zero(layout)),
            d,
            boundary,
        };
        problem.validate()?;
        Ok(problem)
    }
}

pub fn load_problem_file(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut file = ProblemFile::parse(&text)?;
    file.source = Some(path.to_path_buf());
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    const POINCARE: &str = r#"
        name = "poincare"
        dim = [1, 1]
        p = 2
        omega = [[-1, 1]]
        f = "z^2"
        a = ["y", "y^2"]
        b = ["0", "0"]
        rhs = [0, "1"]
        [grid]
        y_special = [["sqrt(2)/2"], ["-sqrt(2)/2"]]
    "#;

    #[test]
    fn parses_poincare_file() {
        let file = ProblemFile::parse(POINCARE).unwrap();
        let pr: VariationalProblem<Exact> = file.build().unwrap();
        assert_eq!(pr.a.len(), 2);
        assert_eq!(pr.rhs[1], Exact::one());
        assert_eq!(pr.omega.volume(), Exact::from_i64(2));
        let s: f64 = file.grid.y_special.as_ref().unwrap()[0][0].to_scalar().unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = format!("{POINCARE}\nbogus = 1\n");
        assert!(matches!(ProblemFile::parse(&bad), Err(Error::Parse(_))));
        let bad_section = POINCARE.replace("y_special", "y_speshul");
        assert!(ProblemFile::parse(&bad_section).is_err());
    }

    #[test]
    fn reports_bad_polynomials_and_shapes() {
        let file = ProblemFile::parse(&POINCARE.replace("\"z^2\"", "\"z^^2\"")).unwrap();
        assert!(matches!(file.build::<f64>(), Err(Error::Parse(_))));
        let file = ProblemFile::parse(&POINCARE.replace("rhs = [0, \"1\"]", "rhs = [0]")).unwrap();
        assert!(matches!(file.build::<f64>(), Err(Error::Dimension(_))));
        let file = ProblemFile::parse(&POINCARE.replace("[[-1, 1]]", "[[-1, 1], [0, 1]]")).unwrap();
        assert!(file.build::<f64>().is_err());
    }

    #[test]
    fn float_literals_convert_exactly() {
        let file = ProblemFile::parse(&POINCARE.replace("[[-1, 1]]", "[[-0.1, 0.3]]")).unwrap();
        let pr: VariationalProblem<Exact> = file.build().unwrap();
        assert_eq!(pr.omega.volume(), Exact::from_ratio(2, 5));
    }

    #[test]
    fn dirichlet_default_constraint() {
        let text = POINCARE.replace("f = \"z^2\"", "boundary = \"dirichlet\"\nf = \"z^2\"");
        let pr: VariationalProblem<f64> = ProblemFile::parse(&text).unwrap().build().unwrap();
        assert!(pr.is_dirichlet());
        assert_eq!(format!("{:?}", pr.d), "y^2");
    }
}
