//! One function per verb. Each writes its tables into the run directory and
//! prints a summary; failed checks come back as [`Outcome::Failed`].

use std::path::Path;

use varbound::fem::{minimize_fe, refinement_study, FeOptions, FeSolution, Mesh};
use varbound::legendre::{certificate_from_dual_fields, solve_conjugate_dual_1d, split_convex_additive, DualSettings};
use varbound::measures::{
    check_membership, default_h_basis, default_l_basis, default_phi_basis, MeasureFile, MembershipReport,
};
use varbound::omr::{extract_measure, solve_omr, GridSpec, OmrBases, DEFAULT_H_DEGREE, DEFAULT_PHI_DEGREE};
use varbound::pdr::{
    certify, search_negativity, solve_pdr, weak_duality_report, CertificateFile, DualCertificate, PdrSpec,
};
use varbound::problem::{NumberText, ProblemFile};
use varbound::{Error, Exact, Result, Scalar, VariationalProblem};

use crate::builtin::{self, Source};
use crate::output::{num, opt, RunDir, Table};

pub enum Outcome {
    Passed,
    Failed(String),
}

/// Flags shared by the solver verbs.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub grid: Option<String>,
    pub phi_degree: Option<u32>,
    pub h_degree: Option<u32>,
    pub radius: Option<f64>,
    pub seed: Option<u64>,
}

fn dims(value: &str, n: usize) -> Result<Vec<usize>> {
    let parts: Vec<usize> = value
        .split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad grid size {value:?}"))))
        .collect::<Result<_>>()?;
    match parts.len() {
        1 => Ok(vec![parts[0]; n]),
        k if k == n => Ok(parts),
        k => Err(Error::Dimension(format!("grid size {value:?} has {k} entries, the domain has {n} axes"))),
    }
}

/// Applies command-line overrides to every section they concern.
pub fn apply(pf: &mut ProblemFile, o: &Overrides) -> Result<()> {
    let n = pf.dim[0];
    if let Some(spec) = &o.grid {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("grid override {item:?} is not key=value")))?;
            let count = || value.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad count in {item:?}")));
            match key.trim() {
                "cells" => pf.grid.cells = Some(dims(value, n)?),
                "gauss" => pf.grid.gauss = Some(count()?),
                "x" => {
                    pf.pdr.x_nodes = Some(count()?);
                    pf.sharp.x_nodes = Some(count()?);
                }
                "y" => {
                    pf.grid.y_nodes = Some(count()?);
                    pf.pdr.y_nodes = Some(count()?);
                }
                "z" => {
                    pf.grid.z_nodes = Some(count()?);
                    pf.pdr.z_nodes = Some(count()?);
                }
                "conj" => pf.sharp.conj_nodes = Some(count()?),
                "elements" => pf.fem.elements = Some(dims(value, n)?),
                other => {
                    return Err(Error::Parse(format!(
                        "unknown grid key {other:?}; use cells, gauss, x, y, z, conj or elements"
                    )))
                }
            }
        }
    }
    if let Some(d) = o.phi_degree {
        pf.grid.phi_degree = Some(d);
        pf.pdr.phi_degree = Some(d);
    }
    if let Some(d) = o.h_degree {
        pf.grid.h_degree = Some(d);
        pf.pdr.h_degree = Some(d);
    }
    if let Some(r) = o.radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("radius must be positive, got {r}")));
        }
        pf.grid.radius = Some(NumberText::Float(r));
        pf.pdr.radius = Some(r);
        pf.sharp.z_range = Some(r);
        pf.sharp.y_range = Some(r);
    }
    if let Some(s) = o.seed {
        pf.fem.seed = Some(s);
    }
    Ok(())
}

/// How a problem is referred to from files written next to the outputs.
fn reference(src: &Source) -> String {
    src.label.strip_prefix("builtin:").unwrap_or(&src.label).to_string()
}

fn point(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

fn mesh_label(divisions: &[usize]) -> String {
    divisions.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

// ---------------------------------------------------------------- omr

pub struct OmrSummary {
    pub value: f64,
    pub z_masses: Vec<(Vec<f64>, f64)>,
}

fn run_omr(pf: &ProblemFile, problem: &VariationalProblem<f64>) -> Result<(OmrSummary, Table, MeasureParts)> {
    let spec = GridSpec::from_section(&pf.grid, problem.layout)?;
    let bases = OmrBases::from_section(&pf.grid, problem, &spec)?;
    let sol = solve_omr(problem, &spec, &bases)?;
    let (pair, report) = extract_measure(&sol, problem, &bases)?;
    let mut t = Table::new(&[
        "problem",
        "bulk_nodes",
        "boundary_nodes",
        "rows",
        "columns",
        "iterations",
        "value",
        "duality_gap",
        "max_residual",
        "support_violation",
    ]);
    t.push(vec![
        problem.name.clone(),
        pair.grid.bulk.len().to_string(),
        pair.grid.boundary.len().to_string(),
        sol.rows.to_string(),
        sol.columns.to_string(),
        sol.iterations.to_string(),
        num(sol.value),
        num(sol.duality_gap),
        num(report.max_abs_residual()),
        num(report.support_violation_mu.max(report.support_violation_nu)),
    ]);
    let (mu, nu) = pair.to_measures()?;
    let parts = MeasureParts { mu, nu, z: pair.z_mass_fractions(), y: pair.y_mass_fractions() };
    Ok((OmrSummary { value: sol.value, z_masses: parts.z.clone() }, t, parts))
}

struct MeasureParts {
    mu: varbound::measures::ProductMeasure<f64>,
    nu: varbound::measures::ProductMeasure<f64>,
    z: Vec<(Vec<f64>, f64)>,
    y: Vec<(Vec<f64>, f64)>,
}

fn mass_table(label: &str, masses: &[(Vec<f64>, f64)]) -> Table {
    let mut t = Table::new(&[label, "mass_fraction"]);
    for (p, w) in masses {
        t.push(vec![point(p), num(*w)]);
    }
    t
}

pub fn omr(mut pf: ProblemFile, src: &Source, o: &Overrides, run: &mut RunDir) -> Result<Outcome> {
    apply(&mut pf, o)?;
    run.input("problem", src);
    let problem = pf.build::<f64>()?;
    let (summary, table, parts) = run_omr(&pf, &problem)?;
    run.table("omr.csv", &table)?;
    run.table("omr_z_masses.csv", &mass_table("z", &parts.z))?;
    run.table("omr_y_masses.csv", &mass_table("y", &parts.y))?;
    let mut dump = MeasureFile::from_measures(&reference(src), &parts.mu, &parts.nu);
    // The extracted pair only satisfies the test functions the LP enforced.
    dump.check.phi_degree = Some(pf.grid.phi_degree.unwrap_or(DEFAULT_PHI_DEGREE));
    dump.check.h_degree = Some(pf.grid.h_degree.unwrap_or(DEFAULT_H_DEGREE));
    let dump = dump.to_toml()?;
    run.write("omr.measure", &dump)?;
    println!("{}", table.render());
    println!("\nlargest z masses:");
    for (z, w) in summary.z_masses.iter().take(4) {
        println!("  z = [{}]  mass {:.6}", point(z), w);
    }
    Ok(Outcome::Passed)
}

// ---------------------------------------------------------------- pdr

fn cert_row(t: &mut Table, name: &str, cert: &DualCertificate, extra: &[String]) {
    let v = cert.verification.as_ref();
    let mut row = vec![
        name.to_string(),
        num(cert.raw_value),
        num(cert.certified_value),
        opt(v.map(|v| v.min_f)),
        opt(v.map(|v| v.min_g)),
        v.map_or(false, |v| v.verified).to_string(),
    ];
    row.extend_from_slice(extra);
    t.push(row);
}

const CERT_COLUMNS: [&str; 6] = ["problem", "raw_value", "certified_value", "min_f", "min_g", "verified"];

pub fn pdr_solve(mut pf: ProblemFile, src: &Source, o: &Overrides, run: &mut RunDir) -> Result<Outcome> {
    apply(&mut pf, o)?;
    run.input("problem", src);
    let problem = pf.build::<f64>()?;
    let spec = PdrSpec::from_section(&pf.pdr)?;
    let sol = solve_pdr(&problem, &spec)?;
    let mut header = CERT_COLUMNS.to_vec();
    header.extend(["phi_degree", "h_degree", "nodes", "rounds", "lp_iterations", "lp_value"]);
    let mut t = Table::new(&header);
    let extra = [
        spec.phi_degree.to_string(),
        spec.h_degree.to_string(),
        sol.nodes.to_string(),
        sol.rounds.to_string(),
        sol.lp_iterations.to_string(),
        num(sol.lp_value),
    ];
    cert_row(&mut t, &problem.name, &sol.certificate, &extra);
    run.table("pdr.csv", &t)?;
    run.write("certificate.toml", &CertificateFile::from_certificate(&reference(src), &sol.certificate).to_toml()?)?;
    println!("{}", t.render());
    Ok(verified_outcome(&sol.certificate))
}

fn verified_outcome(cert: &DualCertificate) -> Outcome {
    match &cert.verification {
        Some(v) if v.verified => Outcome::Passed,
        Some(v) => Outcome::Failed(format!("certificate could not be verified: {}", v.caveat)),
        None => Outcome::Failed("certificate has no verification record".into()),
    }
}

/// Certificate file plus the problem it refers to (or `problem_arg`).
fn load_certificate(
    path: &str,
    problem_arg: Option<&str>,
    run: &mut RunDir,
) -> Result<(CertificateFile, ProblemFile, VariationalProblem<f64>, DualCertificate)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_string(), source: e })?;
    let file = CertificateFile::parse(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    run.input("certificate", &Source { label: path.to_string(), text, dir: None });
    let (pf, src) = match problem_arg {
        Some(p) => builtin::problem(p)?,
        None => builtin::referenced_problem(&file.problem, Path::new(path).parent())?,
    };
    run.input("problem", &src);
    let problem = pf.build::<f64>()?;
    let cert = file.to_certificate(&problem)?;
    Ok((file, pf, problem, cert))
}

fn check_radius(radius: Option<f64>, cert: &DualCertificate, pf: &ProblemFile) -> f64 {
    radius
        .or_else(|| cert.verification.as_ref().map(|v| v.radius))
        .or(pf.pdr.radius)
        .unwrap_or_else(|| PdrSpec::default().radius)
}

pub fn pdr_certify(
    path: &str,
    problem_arg: Option<&str>,
    radius: Option<f64>,
    run: &mut RunDir,
) -> Result<Outcome> {
    let (file, pf, problem, mut cert) = load_certificate(path, problem_arg, run)?;
    let radius = check_radius(radius, &cert, &pf);
    let samples = pf.pdr.verify_samples.unwrap_or_else(|| PdrSpec::default().verify_samples);
    cert.raw_value = cert.bound(&problem)?;
    cert.verification = None;
    let certified = certify(&problem, &cert, radius, samples)?;
    let mut t = Table::new(&CERT_COLUMNS);
    cert_row(&mut t, &problem.name, &certified, &[]);
    run.table("pdr_certify.csv", &t)?;
    run.write("certificate.toml", &CertificateFile::from_certificate(&file.problem, &certified).to_toml()?)?;
    println!("{}", t.render());
    Ok(verified_outcome(&certified))
}

pub fn pdr_check(
    path: &str,
    problem_arg: Option<&str>,
    radius: Option<f64>,
    tol: f64,
    run: &mut RunDir,
) -> Result<Outcome> {
    let (file, pf, problem, cert) = load_certificate(path, problem_arg, run)?;
    let radius = check_radius(radius, &cert, &pf);
    let samples = cert
        .verification
        .as_ref()
        .map(|v| v.samples)
        .or(pf.pdr.verify_samples)
        .unwrap_or_else(|| PdrSpec::default().verify_samples);
    let bound = cert.bound(&problem)?;
    let found = search_negativity(&problem, &cert, radius, samples, &[])?;
    let min_f = found.bulk.first().map_or(f64::NAN, |b| b.1);
    let min_g = found.boundary.first().map_or(0.0, |b| b.2);
    let bound_ok = (bound - file.certified_value).abs() <= tol * (1.0 + bound.abs());
    let passed = found.reliable && found.admissible && min_f >= -tol && min_g >= -tol && bound_ok;
    let mut t = Table::new(&[
        "problem",
        "recorded_value",
        "recomputed_bound",
        "min_f",
        "min_g",
        "radius",
        "reliable",
        "passed",
    ]);
    t.push(vec![
        problem.name.clone(),
        num(file.certified_value),
        num(bound),
        num(min_f),
        num(min_g),
        num(radius),
        found.reliable.to_string(),
        passed.to_string(),
    ]);
    run.table("pdr_check.csv", &t)?;
    println!("{}", t.render());
    Ok(if passed {
        Outcome::Passed
    } else if !bound_ok {
        Outcome::Failed(format!("recorded value {} differs from the bound {bound}", file.certified_value))
    } else {
        Outcome::Failed(format!("certificate is negative somewhere: min F = {min_f:e}, min G = {min_g:e}"))
    })
}

// ---------------------------------------------------------------- sharp

pub struct SharpLevel {
    pub x_nodes: usize,
    pub objective: f64,
    pub certified: Option<DualCertificate>,
    pub status: String,
}

fn sharp_levels(problem: &VariationalProblem<f64>, settings: &DualSettings) -> Result<Vec<SharpLevel>> {
    let x = settings.x_nodes;
    let mut sizes = vec![(x - 1) / 4 + 1, (x - 1) / 2 + 1, x];
    sizes.dedup();
    let mut out = Vec::new();
    for nodes in sizes {
        let s = DualSettings { x_nodes: nodes, ..settings.clone() };
        if s.validate().is_err() && nodes != x {
            continue;
        }
        let fields = solve_conjugate_dual_1d(problem, &s)?;
        let (certified, status) = match certificate_from_dual_fields(&fields, problem, &s) {
            Ok(c) => (Some(c), fields.status.to_string()),
            Err(e) if nodes != x => (None, format!("no certificate: {e}")),
            Err(e) => return Err(e),
        };
        out.push(SharpLevel { x_nodes: nodes, objective: fields.objective, certified, status });
    }
    Ok(out)
}

pub fn sharp(mut pf: ProblemFile, src: &Source, o: &Overrides, tol: Option<f64>, run: &mut RunDir) -> Result<Outcome> {
    apply(&mut pf, o)?;
    run.input("problem", src);
    let problem = pf.build::<f64>()?;
    split_convex_additive(&problem)?;
    let mut settings = DualSettings::from_section(&pf.sharp)?;
    if let Some(t) = tol {
        settings.fit_tol = t;
    }
    let levels = sharp_levels(&problem, &settings)?;
    let mut t = Table::new(&["x_nodes", "conj_nodes", "dual_objective", "certified_value", "oracle", "status"]);
    for l in &levels {
        t.push(vec![
            l.x_nodes.to_string(),
            settings.conj_nodes.to_string(),
            num(l.objective),
            opt(l.certified.as_ref().map(|c| c.certified_value)),
            opt(pf.oracle.f_star),
            l.status.clone(),
        ]);
    }
    run.table("sharp.csv", &t)?;
    let finest = levels.last().and_then(|l| l.certified.as_ref());
    if let Some(cert) = finest {
        run.write("sharp_certificate.toml", &CertificateFile::from_certificate(&reference(src), cert).to_toml()?)?;
    }
    println!("{}", t.render());
    Ok(finest.map_or(Outcome::Failed("no certificate on the finest grid".into()), verified_outcome))
}

// ---------------------------------------------------------------- upper

fn fem_options(pf: &ProblemFile, tol: Option<f64>) -> FeOptions {
    let mut opts = FeOptions::from_section(&pf.fem);
    if let Some(t) = tol {
        opts.gtol = t;
    }
    opts
}

fn main_mesh(pf: &ProblemFile, problem: &VariationalProblem<f64>) -> Result<Mesh> {
    let n = problem.layout.n;
    let divisions = pf.fem.elements.clone().unwrap_or_else(|| vec![if n == 1 { 64 } else { 16 }; n]);
    Mesh::uniform(&problem.omega.to_f64(), &divisions)
}

fn upper_row(t: &mut Table, stage: &str, s: &FeSolution) {
    t.push(vec![
        stage.to_string(),
        mesh_label(&s.mesh.divisions),
        num(s.mesh.h()),
        num(s.value),
        s.iterations.to_string(),
        s.converged.to_string(),
        s.basins.len().to_string(),
    ]);
}

const UPPER_COLUMNS: [&str; 7] = ["stage", "mesh", "h", "value", "iterations", "converged", "starts"];

pub fn upper(mut pf: ProblemFile, src: &Source, o: &Overrides, tol: Option<f64>, run: &mut RunDir) -> Result<Outcome> {
    apply(&mut pf, o)?;
    run.input("problem", src);
    let problem = pf.build::<f64>()?;
    let opts = fem_options(&pf, tol);
    run.seed = Some(opts.seed);
    let mesh = main_mesh(&pf, &problem)?;
    let sol = minimize_fe(&problem, &mesh, &opts)?;
    let mut t = Table::new(&UPPER_COLUMNS);
    upper_row(&mut t, "main", &sol);
    if let Some(levels) = &pf.fem.refinements {
        let levels: Vec<Vec<usize>> = levels.iter().map(|&k| vec![k; problem.layout.n]).collect();
        for s in refinement_study(&problem, &levels, &opts)? {
            upper_row(&mut t, "refinement", &s);
        }
    }
    run.table("upper.csv", &t)?;
    let mut basins = Table::new(&["start", "value"]);
    for (k, v) in sol.basins.iter().enumerate() {
        basins.push(vec![k.to_string(), num(*v)]);
    }
    run.table("upper_basins.csv", &basins)?;
    let (n, m) = (problem.layout.n, problem.layout.m);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend((1..=m).map(|j| format!("u{j}")));
    let mut nodal = Table { header, rows: Vec::new() };
    for (k, x) in sol.mesh.nodes.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.extend(sol.nodal[k * m..(k + 1) * m].iter().map(|v| num(*v)));
        nodal.push(row);
    }
    run.table("upper_nodal.csv", &nodal)?;
    println!("{}", t.render());
    Ok(if sol.value.is_finite() { Outcome::Passed } else { Outcome::Failed("upper bound is not finite".into()) })
}

// ---------------------------------------------------------------- verify-measure

pub struct MeasureCheck {
    pub rows: Vec<(String, String)>,
    pub max_abs: f64,
    pub objective: String,
    pub passed: bool,
}

fn membership<S: Scalar>(
    file: &MeasureFile,
    pf: &ProblemFile,
    degrees: (u32, u32, u32),
    show: impl Fn(&S) -> String,
    pass: impl Fn(&MembershipReport<S>) -> bool,
) -> Result<MeasureCheck> {
    let problem = pf.build::<S>()?;
    let (mu, nu) = file.build(&problem)?;
    let l = problem.layout;
    let (phi, h, lb) = degrees;
    let report = check_membership(
        &mu,
        &nu,
        &problem,
        &default_phi_basis(l, phi),
        &default_h_basis(l, h),
        &default_l_basis(l, lb),
    )?;
    let mut rows: Vec<(String, String)> = report.rows().iter().map(|(k, v)| (k.clone(), show(v))).collect();
    rows.push(("support_mu".into(), num(report.support_violation_mu)));
    rows.push(("support_nu".into(), num(report.support_violation_nu)));
    Ok(MeasureCheck { rows, max_abs: report.max_abs_residual(), objective: show(&report.objective), passed: pass(&report) })
}

pub fn check_measure_file(
    file: &MeasureFile,
    src: &Source,
    exact: bool,
    degrees: (Option<u32>, Option<u32>),
    tol: f64,
) -> Result<(MeasureCheck, Source)> {
    let (pf, psrc) = builtin::referenced_problem(&file.problem, src.dir.as_deref())?;
    let phi = degrees.0.or(file.check.phi_degree).unwrap_or(4);
    let h = degrees.1.or(file.check.h_degree).unwrap_or(phi);
    let lb = file.check.l_degree.unwrap_or(h);
    let check = if exact {
        membership::<Exact>(file, &pf, (phi, h, lb), |v| format!("{v:?}"), |r| r.all_exactly_zero())?
    } else {
        membership::<f64>(file, &pf, (phi, h, lb), |v| num(*v), |r| r.within(tol))?
    };
    Ok((check, psrc))
}

pub fn verify_measure(
    arg: &str,
    exact: bool,
    degrees: (Option<u32>, Option<u32>),
    tol: f64,
    run: &mut RunDir,
) -> Result<Outcome> {
    let (file, src) = builtin::measure(arg)?;
    run.input("measure", &src);
    let (check, psrc) = check_measure_file(&file, &src, exact, degrees, tol)?;
    run.input("problem", &psrc);
    let mut t = Table::new(&["constraint", "residual"]);
    for (k, v) in &check.rows {
        t.push(vec![k.clone(), v.clone()]);
    }
    run.table("measure_residuals.csv", &t)?;
    let mode = if exact { "rational" } else { "float" };
    println!(
        "{}: {} constraints checked in {mode} mode, max |residual| = {}, objective = {}, {}",
        src.label,
        check.rows.len(),
        num(check.max_abs),
        check.objective,
        if check.passed { "all residuals vanish" } else { "FAILED" }
    );
    Ok(if check.passed {
        Outcome::Passed
    } else {
        Outcome::Failed(format!("measure residuals do not vanish (max {})", num(check.max_abs)))
    })
}

// ---------------------------------------------------------------- sandwich and examples

pub struct Sandwich {
    pub name: String,
    pub oracle: Option<f64>,
    pub upper: f64,
    pub omr: f64,
    pub pdr: f64,
    pub sharp: Option<f64>,
    pub consistent: bool,
    pub message: String,
}

pub fn compute_sandwich(pf: &ProblemFile, tol: f64, with_sharp: bool) -> Result<(Sandwich, DualCertificate)> {
    let problem = pf.build::<f64>()?;
    let opts = fem_options(pf, None);
    let upper = minimize_fe(&problem, &main_mesh(pf, &problem)?, &opts)?;
    let (omr, _, _) = run_omr(pf, &problem)?;
    let pdr = solve_pdr(&problem, &PdrSpec::from_section(&pf.pdr)?)?;
    let report = weak_duality_report(&problem, omr.value, &pdr.certificate, Some(upper.value), tol);
    let sharp = if with_sharp && split_convex_additive(&problem).is_ok() {
        let settings = DualSettings::from_section(&pf.sharp)?;
        let fields = solve_conjugate_dual_1d(&problem, &settings)?;
        Some(certificate_from_dual_fields(&fields, &problem, &settings)?.certified_value)
    } else {
        None
    };
    Ok((
        Sandwich {
            name: problem.name.clone(),
            oracle: pf.oracle.f_star,
            upper: upper.value,
            omr: omr.value,
            pdr: pdr.certificate.certified_value,
            sharp,
            consistent: report.consistent && pdr.certificate.is_certified(),
            message: report.message,
        },
        pdr.certificate,
    ))
}

const SANDWICH_COLUMNS: [&str; 7] = ["problem", "oracle", "pdr_certified", "omr", "upper", "sharp_certified", "consistent"];

fn sandwich_row(t: &mut Table, s: &Sandwich) {
    t.push(vec![
        s.name.clone(),
        opt(s.oracle),
        num(s.pdr),
        num(s.omr),
        num(s.upper),
        opt(s.sharp),
        s.consistent.to_string(),
    ]);
}

pub fn sandwich(mut pf: ProblemFile, src: &Source, o: &Overrides, tol: f64, run: &mut RunDir) -> Result<Outcome> {
    apply(&mut pf, o)?;
    run.input("problem", src);
    run.seed = Some(fem_options(&pf, None).seed);
    let (s, cert) = compute_sandwich(&pf, tol, false)?;
    let mut t = Table::new(&SANDWICH_COLUMNS);
    sandwich_row(&mut t, &s);
    run.table("sandwich.csv", &t)?;
    run.write("certificate.toml", &CertificateFile::from_certificate(&reference(src), &cert).to_toml()?)?;
    println!("{}\n\n{}", t.render(), s.message);
    Ok(if s.consistent { Outcome::Passed } else { Outcome::Failed(s.message) })
}

pub fn examples(seed: Option<u64>, tol: f64, run: &mut RunDir) -> Result<Outcome> {
    let mut t = Table::new(&SANDWICH_COLUMNS);
    let mut failures = Vec::new();
    for b in builtin::PROBLEMS {
        let (mut pf, src) = builtin::problem(b.name)?;
        run.input("problem", &src);
        if let Some(s) = seed {
            pf.fem.seed = Some(s);
        }
        let (s, _) = compute_sandwich(&pf, tol, true)?;
        if !s.consistent {
            failures.push(s.message.clone());
        }
        sandwich_row(&mut t, &s);
    }
    run.seed = seed;
    run.table("examples.csv", &t)?;
    let mut m = Table::new(&["measure", "problem", "mode", "constraints", "max_abs_residual", "objective", "passed"]);
    for b in builtin::MEASURES {
        let (file, src) = builtin::measure(b.file)?;
        run.input("measure", &src);
        let (check, _) = check_measure_file(&file, &src, true, (None, None), 0.0)?;
        if !check.passed {
            failures.push(format!("{} has nonzero residuals", b.file));
        }
        m.push(vec![
            b.file.to_string(),
            file.problem.clone(),
            "rational".into(),
            check.rows.len().to_string(),
            num(check.max_abs),
            check.objective.clone(),
            check.passed.to_string(),
        ]);
    }
    run.table("examples_measures.csv", &m)?;
    println!("{}\n\n{}", t.render(), m.render());
    Ok(if failures.is_empty() { Outcome::Passed } else { Outcome::Failed(failures.join("; ")) })
}
