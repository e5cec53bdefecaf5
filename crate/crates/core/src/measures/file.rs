//! TOML measure files.
//!
//! ```toml
//! problem = "poincare.toml"     # resolved relative to this file
//!
//! [check]
//! phi_degree = 4
//!
//! [[mu]]
//! weight = "1/2"
//! base = "lebesgue"             # or "dirac" with point = [...]
//! y_atoms = [{ at = ["sqrt(2)/2"], mass = 1 }, { at = ["-sqrt(2)/2"], mass = 1 }]
//! z_atoms = [{ at = ["0"], mass = 1 }]
//!
//! [[nu]]
//! weight = "1/2"
//! facet = "all"                 # or "x1=lo", "x2=hi", ...
//! y_atoms = [{ at = ["sqrt(2)/2"], mass = 1 }, { at = ["-sqrt(2)/2"], mass = 1 }]
//! ```
//!
//! Atom coordinates are polynomials in `x` written in the polynomial text
//! format; `z` atoms list the matrix entries row-major (`z11, z12, .., zmn`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pushforward::surface_base;
use super::{Atom, MeasurePiece, ProductMeasure, XBase};
use crate::error::{Error, Result};
use crate::poly::{format_polynomial, parse_polynomial, Polynomial, VarLayout};
use crate::problem::{load_problem_file, BoxDomain, Facet, NumberText, ProblemFile, VariationalProblem};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub at: Vec<String>,
    pub mass: NumberText,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PieceEntry {
    #[serde(default = "one")]
    pub weight: NumberText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<[NumberText; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<NumberText>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet: Option<String>,
    pub y_atoms: Vec<AtomEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_atoms: Vec<AtomEntry>,
}

fn one() -> NumberText {
    NumberText::Int(1)
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub phi_degree: Option<u32>,
    pub h_degree: Option<u32>,
    pub l_degree: Option<u32>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub problem: String,
    #[serde(default)]
    pub check: CheckSection,
    pub mu: Vec<PieceEntry>,
    pub nu: Vec<PieceEntry>,
}

impl MeasureFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Builds `(mu, nu)` over the problem's layout and domain.
    pub fn build<S: Scalar>(&self, problem: &VariationalProblem<S>) -> Result<(ProductMeasure<S>, ProductMeasure<S>)> {
        let layout = problem.layout;
        let mut mu_pieces = Vec::new();
        for (k, entry) in self.mu.iter().enumerate() {
            mu_pieces.push(build_bulk_piece(entry, problem).map_err(|e| tag(e, "mu", k))?);
        }
        let mut nu_pieces = Vec::new();
        for (k, entry) in self.nu.iter().enumerate() {
            nu_pieces.extend(build_boundary_pieces(entry, problem).map_err(|e| tag(e, "nu", k))?);
        }
        let mu = ProductMeasure::bulk(layout, mu_pieces)?;
        let nu = ProductMeasure::boundary(layout, nu_pieces)?;
        check_radicands(problem, &mu, &nu)?;
        Ok((mu, nu))
    }

    /// Serializes measures whose atoms have constant positions.
    pub fn from_measures<S: Scalar>(problem_ref: &str, mu: &ProductMeasure<S>, nu: &ProductMeasure<S>) -> Self {
        let atom = |a: &Atom<S>| AtomEntry {
            at: a.position.iter().map(format_polynomial).collect(),
            mass: NumberText::Text(format!("{:?}", a.mass)),
        };
        let region = |b: &[(S, S)]| -> Vec<[NumberText; 2]> {
            b.iter()
                .map(|(lo, hi)| [NumberText::Text(format!("{lo:?}")), NumberText::Text(format!("{hi:?}"))])
                .collect()
        };
        let piece = |p: &MeasurePiece<S>| {
            let mut entry = PieceEntry {
                weight: NumberText::Text(format!("{:?}", p.weight)),
                base: None,
                region: None,
                point: None,
                facet: None,
                y_atoms: p.y_atoms.iter().map(atom).collect(),
                z_atoms: p.z_atoms.iter().map(atom).collect(),
            };
            match &p.base {
                XBase::Lebesgue(b) => {
                    entry.base = Some("lebesgue".into());
                    entry.region = Some(region(b.bounds()));
                }
                XBase::Surface { facet, others, .. } => {
                    entry.facet = Some(facet.to_string());
                    if !others.is_empty() {
                        entry.region = Some(region(others));
                    }
                }
                XBase::Dirac(pt) => {
                    entry.base = Some("dirac".into());
                    entry.point = Some(pt.iter().map(|v| NumberText::Text(format!("{v:?}"))).collect());
                }
                XBase::FacetPoint { facet, point } => {
                    entry.base = Some("dirac".into());
                    entry.facet = Some(facet.to_string());
                    entry.point = Some(point.iter().map(|v| NumberText::Text(format!("{v:?}"))).collect());
                }
            }
            entry
        };
        MeasureFile {
            problem: problem_ref.to_string(),
            check: CheckSection::default(),
            mu: mu.pieces().iter().map(piece).collect(),
            nu: nu.pieces().iter().map(piece).collect(),
        }
    }
}

fn tag(e: Error, block: &str, k: usize) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{block}[{k}]: {m}")),
        Error::Invalid(m) => Error::Invalid(format!("{block}[{k}]: {m}")),
        Error::Dimension(m) => Error::Dimension(format!("{block}[{k}]: {m}")),
        other => other,
    }
}

fn atoms<S: Scalar>(entries: &[AtomEntry], layout: VarLayout, len: usize) -> Result<Vec<Atom<S>>> {
    entries
        .iter()
        .map(|e| {
            if e.at.len() != len {
                return Err(Error::Dimension(format!("atom has {} coordinates, expected {len}", e.at.len())));
            }
            let position = e.at.iter().map(|t| parse_polynomial(t, layout)).collect::<Result<Vec<Polynomial<S>>>>()?;
            Ok(Atom { position, mass: e.mass.to_scalar()? })
        })
        .collect()
}

fn region<S: Scalar>(entry: &Option<Vec<[NumberText; 2]>>) -> Result<Option<Vec<(S, S)>>> {
    entry
        .as_ref()
        .map(|r| r.iter().map(|[a, b]| Ok((a.to_scalar()?, b.to_scalar()?))).collect())
        .transpose()
}

fn build_bulk_piece<S: Scalar>(entry: &PieceEntry, problem: &VariationalProblem<S>) -> Result<MeasurePiece<S>> {
    let layout = problem.layout;
    if entry.facet.is_some() {
        return Err(Error::Invalid("bulk pieces have no facet".into()));
    }
    let base = match entry.base.as_deref().unwrap_or("lebesgue") {
        "lebesgue" => {
            let bounds = region(&entry.region)?.unwrap_or_else(|| problem.omega.bounds().to_vec());
            XBase::Lebesgue(BoxDomain::new(bounds)?)
        }
        "dirac" => {
            let pt = entry.point.as_ref().ok_or_else(|| Error::Invalid("dirac base needs a point".into()))?;
            XBase::Dirac(pt.iter().map(NumberText::to_scalar).collect::<Result<_>>()?)
        }
        other => return Err(Error::Invalid(format!("unknown base {other:?}"))),
    };
    Ok(MeasurePiece {
        weight: entry.weight.to_scalar()?,
        base,
        y_atoms: atoms(&entry.y_atoms, layout, layout.m)?,
        z_atoms: atoms(&entry.z_atoms, layout, layout.m * layout.n)?,
    })
}

fn parse_facet(text: &str, n: usize) -> Result<Facet> {
    let bad = || Error::Parse(format!("facet {text:?} should look like \"x1=lo\" or \"x1=hi\""));
    let (axis, side) = text.split_once('=').ok_or_else(bad)?;
    let axis: usize = axis.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if axis == 0 || axis > n {
        return Err(bad());
    }
    let upper = match side.trim() {
        "lo" => false,
        "hi" => true,
        _ => return Err(bad()),
    };
    Ok(Facet { axis: axis - 1, upper })
}

fn build_boundary_pieces<S: Scalar>(
    entry: &PieceEntry,
    problem: &VariationalProblem<S>,
) -> Result<Vec<MeasurePiece<S>>> {
    let layout = problem.layout;
    if !entry.z_atoms.is_empty() {
        return Err(Error::Invalid("boundary pieces carry no z atoms".into()));
    }
    let weight: S = entry.weight.to_scalar()?;
    let y_atoms = atoms(&entry.y_atoms, layout, layout.m)?;
    let facet_text = entry.facet.as_deref().unwrap_or("all");
    match entry.base.as_deref() {
        None | Some("surface") => {}
        Some("dirac") => {
            let facet = parse_facet(facet_text, layout.n)?;
            let pt = entry.point.as_ref().ok_or_else(|| Error::Invalid("dirac base needs a point".into()))?;
            let point: Vec<S> = pt.iter().map(NumberText::to_scalar).collect::<Result<_>>()?;
            if point.len() != layout.n || point[facet.axis] != problem.omega.facet_value(facet) {
                return Err(Error::Invalid(format!("boundary point does not lie on facet {facet}")));
            }
            let base = XBase::FacetPoint { facet, point };
            return Ok(vec![MeasurePiece { weight, base, y_atoms, z_atoms: Vec::new() }]);
        }
        Some(other) => return Err(Error::Invalid(format!("unknown boundary base {other:?}"))),
    }
    let facets = if facet_text == "all" {
        problem.omega.facets()
    } else {
        vec![parse_facet(facet_text, layout.n)?]
    };
    let others = region::<S>(&entry.region)?;
    facets
        .into_iter()
        .map(|facet| {
            let base = match &others {
                None => surface_base(&problem.omega, facet),
                Some(o) => {
                    if o.len() + 1 != layout.n {
                        return Err(Error::Dimension("facet region needs n-1 intervals".into()));
                    }
                    XBase::Surface { facet, value: problem.omega.facet_value(facet), others: o.clone() }
                }
            };
            Ok(MeasurePiece { weight: weight.clone(), base, y_atoms: y_atoms.clone(), z_atoms: Vec::new() })
        })
        .collect()
}

fn check_radicands<S: Scalar>(
    problem: &VariationalProblem<S>,
    mu: &ProductMeasure<S>,
    nu: &ProductMeasure<S>,
) -> Result<()> {
    let mut seen: Option<u64> = None;
    let mut note = |v: &S| -> Result<()> {
        let r = v.radicand();
        if r == 1 {
            return Ok(());
        }
        match seen {
            Some(prev) if prev != r => {
                Err(Error::Invalid(format!("exact data mixes sqrt({prev}) and sqrt({r}); use a single radicand")))
            }
            _ => {
                seen = Some(r);
                Ok(())
            }
        }
    };
    let polys = [&problem.f, &problem.g, &problem.c, &problem.d].into_iter().chain(&problem.a).chain(&problem.b);
    for p in polys {
        for (_, c) in p.terms() {
            note(c)?;
        }
    }
    for v in &problem.rhs {
        note(v)?;
    }
    for measure in [mu, nu] {
        for piece in measure.pieces() {
            note(&piece.weight)?;
            for atom in piece.y_atoms.iter().chain(&piece.z_atoms) {
                note(&atom.mass)?;
                for p in &atom.position {
                    for (_, c) in p.terms() {
                        note(c)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Reads a measure file and the problem file it refers to.
pub fn load_measure_file(path: &Path) -> Result<(MeasureFile, ProblemFile)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let measure = MeasureFile::parse(&text)?;
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let problem = load_problem_file(&base.join(&measure.problem))?;
    Ok((measure, problem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{check_membership, default_h_basis, default_l_basis, default_phi_basis};
    use crate::scalar::Exact;

    const PROBLEM: &str = r#"
        name = "poincare"
        dim = [1, 1]
        p = 2
        omega = [[-1, 1]]
        f = "z^2"
        a = ["y", "y^2"]
        b = ["0", "0"]
        rhs = [0, 1]
    "#;

    const MEASURE: &str = r#"
        problem = "poincare.toml"
        [[mu]]
        weight = "1/2"
        y_atoms = [{ at = ["sqrt(2)/2"], mass = 1 }, { at = ["-sqrt(2)/2"], mass = 1 }]
        z_atoms = [{ at = ["0"], mass = 1 }]
        [[nu]]
        weight = "1/2"
        facet = "all"
        y_atoms = [{ at = ["sqrt(2)/2"], mass = 1 }, { at = ["-sqrt(2)/2"], mass = 1 }]
    "#;

    #[test]
    fn two_atom_measure_is_feasible_with_zero_cost() {
        let problem: VariationalProblem<Exact> = ProblemFile::parse(PROBLEM).unwrap().build().unwrap();
        let (mu, nu) = MeasureFile::parse(MEASURE).unwrap().build(&problem).unwrap();
        let l = problem.layout;
        let rep = check_membership(
            &mu,
            &nu,
            &problem,
            &default_phi_basis(l, 4),
            &default_h_basis(l, 4),
            &default_l_basis(l, 4),
        )
        .unwrap();
        assert!(rep.all_exactly_zero(), "{:?}", rep.rows());
        assert!(rep.objective.is_zero());
    }

    #[test]
    fn round_trip_through_toml() {
        let problem: VariationalProblem<Exact> = ProblemFile::parse(PROBLEM).unwrap().build().unwrap();
        let (mu, nu) = MeasureFile::parse(MEASURE).unwrap().build(&problem).unwrap();
        let text = MeasureFile::from_measures("poincare.toml", &mu, &nu).to_toml().unwrap();
        let (mu2, nu2) = MeasureFile::parse(&text).unwrap().build(&problem).unwrap();
        assert_eq!(mu, mu2);
        assert_eq!(nu, nu2);
    }

    #[test]
    fn rejects_mixed_radicands_and_bad_facets() {
        let problem: VariationalProblem<Exact> = ProblemFile::parse(PROBLEM).unwrap().build().unwrap();
        let mixed = MEASURE.replacen("-sqrt(2)/2", "-sqrt(3)/2", 1);
        assert!(MeasureFile::parse(&mixed).unwrap().build(&problem).is_err());
        let bad = MEASURE.replace("facet = \"all\"", "facet = \"x2=lo\"");
        assert!(MeasureFile::parse(&bad).unwrap().build(&problem).is_err());
        let unknown = MEASURE.replace("weight = \"1/2\"\n        facet", "wait = 1\n        facet");
        assert!(MeasureFile::parse(&unknown).is_err());
    }
}
