use criterion::{black_box, criterion_group, criterion_main, Criterion};
use varbound::fem::{minimize_fe, FeOptions, Mesh};
use varbound::legendre::{conjugate, convexify, SampledFunction};
use varbound::omr::{solve_omr, GridSpec, OmrBases};
use varbound::pdr::{solve_pdr, PdrSpec};
use varbound_bench::problem;

fn legendre(c: &mut Criterion) {
    let f = SampledFunction::from_fn(-3.0, 3.0, 100_001, |z| (z * z - 1.0).powi(2)).unwrap();
    c.bench_function("conjugate 1e5 nodes", |b| b.iter(|| conjugate(black_box(&f)).unwrap()));
    c.bench_function("convexify 1e5 nodes", |b| b.iter(|| convexify(black_box(&f)).unwrap()));
}

fn relaxations(c: &mut Criterion) {
    let mut g = c.benchmark_group("relaxations");
    g.sample_size(10);
    for name in ["poincare", "double_well", "well_1d"] {
        let (pf, p) = problem(name);
        let spec = GridSpec::from_section(&pf.grid, p.layout).unwrap();
        let bases = OmrBases::from_section(&pf.grid, &p, &spec).unwrap();
        g.bench_function(format!("omr {name}"), |b| b.iter(|| solve_omr(&p, &spec, &bases).unwrap()));
        let pdr = PdrSpec::from_section(&pf.pdr).unwrap();
        g.bench_function(format!("pdr {name}"), |b| b.iter(|| solve_pdr(&p, &pdr).unwrap()));
    }
    g.finish();
}

fn finite_elements(c: &mut Criterion) {
    let mut g = c.benchmark_group("fem");
    g.sample_size(10);
    let (pf, p) = problem("poincare");
    let mesh = Mesh::uniform(&p.omega.to_f64(), &[256]).unwrap();
    let opts = FeOptions::from_section(&pf.fem);
    g.bench_function("poincare 256 elements", |b| b.iter(|| minimize_fe(&p, &mesh, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, legendre, relaxations, finite_elements);
criterion_main!(benches);
