use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use vilenkin::experiments::{
    atom_ratio_scan, boundedness_scan, divergence_scan, modulus_martingale, random_function,
    stream, supp_measure_scan, AtomCells, BoundedVariant, DivergenceVariant, ModulusFunction,
    ScanConfig, Verdict,
};
use vilenkin::io::read_csv;
use vilenkin::martingale::{build_counterexample, default_alphas, LambdaRule};
use vilenkin::norms::{hardy_norm, hardy_power, lp_power, modulus_hp};
use vilenkin::transform::{forward, inverse, partial_sum, partial_sum_convolution, DirichletSweep};
use vilenkin::{GeneratorSequence, Grid};

fn gens(text: &str) -> Arc<GeneratorSequence> {
    Arc::new(text.parse().unwrap())
}

fn small_config(trials: usize) -> ScanConfig {
    ScanConfig {
        trials,
        ..ScanConfig::default()
    }
}

fn arb_grid() -> impl Strategy<Value = Grid> {
    (prop::collection::vec(2u32..6, 1..4), 0usize..7)
        .prop_filter_map("grid too large", |(block, n)| {
            Grid::with_cap(GeneratorSequence::cyclic(block).ok()?, n, 1 << 12).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plancherel_and_round_trip(grid in arb_grid(), seed in any::<u64>()) {
        let f = random_function(&grid, &mut stream(seed, grid.resolution(), 0));
        let s = forward(&f);
        let energy = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.size() as f64;
        let spectral = s.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        prop_assert!((energy - spectral).abs() <= 1e-9 * energy);
        prop_assert!(inverse(&s).max_abs_diff(&f) <= 1e-10 * f.sup_norm());
    }

    #[test]
    fn convolution_and_spectral_partial_sums_agree(grid in arb_grid(), seed in any::<u64>(), t in 0.0f64..1.0) {
        let n = ((grid.size() as f64) * t) as usize;
        let f = random_function(&grid, &mut stream(seed, grid.resolution(), 1));
        let a = partial_sum(&f, n).unwrap();
        let b = partial_sum_convolution(&f, n).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-9);
    }
}

/// On `I_s \ I_{s+1}` with `s = ⟨n⟩` the kernel reduces to one geometric sum:
/// `|D_n(x)| = M_s |sin(π n_s x_s / m_s) / sin(π x_s / m_s)|`.
#[test]
fn kernel_modulus_on_the_bottom_annulus_is_a_sine_ratio() {
    for (text, n) in [
        ("2^", 8),
        ("(2,3,4)^", 5),
        ("3^", 5),
        ("5^", 4),
        ("(2,3)^", 6),
    ] {
        let grid = Grid::new(gens(text), n).unwrap();
        let m = grid.generators();
        let mut sweep = DirichletSweep::new(&grid);
        while sweep.advance() && sweep.index() < grid.size() {
            let index = m.decompose(sweep.index() as u64).unwrap();
            let s = index.bottom();
            let (ms, radix) = (grid.base(s), grid.radices()[s] as usize);
            let ns = index.digit(s) as f64;
            for xs in 1..radix {
                let i = xs * ms;
                let angle = PI / radix as f64;
                let expected =
                    ms as f64 * ((angle * ns * xs as f64).sin() / (angle * xs as f64).sin()).abs();
                let got = sweep.current().values()[i].norm();
                assert!(
                    (got - expected).abs() <= 1e-9 * ms as f64,
                    "{text}: n = {}, x_s = {xs}: {got} vs {expected}",
                    sweep.index()
                );
            }
        }
    }
}

/// The bottom-annulus estimate `|D_n| ≥ M_{⟨n⟩}` holds on radices 2 and 3 and
/// fails for radix 4, where `n_s = x_s = 2` gives a zero.
#[test]
fn bottom_annulus_estimate_depends_on_the_radix() {
    for (text, holds) in [("2^", true), ("3^", true), ("(2,3)^", true), ("4^", false)] {
        let grid = Grid::new(gens(text), 4).unwrap();
        let m = grid.generators();
        let mut worst = f64::INFINITY;
        let mut sweep = DirichletSweep::new(&grid);
        while sweep.advance() && sweep.index() < grid.size() {
            let index = m.decompose(sweep.index() as u64).unwrap();
            if index.top() == index.bottom() {
                continue;
            }
            let s = index.bottom();
            let ms = grid.base(s);
            for xs in 1..grid.radices()[s] as usize {
                worst = worst.min(sweep.current().values()[xs * ms].norm() - ms as f64);
            }
        }
        assert_eq!(worst >= -1e-6, holds, "{text}: margin {worst}");
    }
}

#[test]
fn counterexamples_respect_the_atomic_budget() {
    for (text, n, p) in [("2^", 10, 0.5), ("(2,3)^", 7, 2.0 / 3.0), ("3^", 6, 0.5)] {
        let grid = Grid::new(gens(text), n).unwrap();
        let alphas = default_alphas(grid.generators(), n);
        let spec = build_counterexample(p, &alphas, LambdaRule::Divergence, None, &grid).unwrap();
        let ratio = hardy_power(spec.realized(), p).unwrap() / spec.budget();
        assert!(ratio.is_finite() && ratio <= 1.0 + 1e-9, "{text}: {ratio}");
    }
}

#[test]
fn modulus_decays_with_the_tail_budget() {
    for (text, n) in [("2^", 12), ("(2,3)^", 8)] {
        let p = 0.5;
        let grid = Grid::new(gens(text), n).unwrap();
        let spec = modulus_martingale(p, &grid, ModulusFunction::Sharpness).unwrap();
        for level in 0..=n {
            let tail = spec.tail_budget(level);
            let omega = modulus_hp(spec.realized(), level, p).unwrap().powf(p);
            if tail == 0.0 {
                assert!(omega <= 1e-9, "{text}, level {level}: {omega}");
            } else {
                assert!(
                    omega <= tail * (1.0 + 1e-9),
                    "{text}, level {level}: {omega} > {tail}"
                );
            }
        }
    }
}

#[test]
fn hardy_norm_dominates_lp_on_counterexamples() {
    let grid = Grid::new(gens("2^"), 10).unwrap();
    let spec = modulus_martingale(0.5, &grid, ModulusFunction::FastDecay).unwrap();
    let f = spec.realized();
    let (hardy, lp) = (hardy_power(f, 0.5).unwrap(), lp_power(f, 0.5).unwrap());
    assert!(hardy >= lp * (1.0 - 1e-12), "{hardy} < {lp}");
    assert!((hardy_norm(f, 0.5).unwrap() - hardy * hardy).abs() <= 1e-9 * hardy * hardy);
}

#[test]
fn scans_are_deterministic_in_the_seed() {
    let run = |seed| {
        let cfg = ScanConfig {
            seed,
            ..small_config(4)
        };
        atom_ratio_scan(0.5, &gens("(2,3)^"), &[4, 5], AtomCells::Children, &cfg)
            .unwrap()
            .to_json()
            .unwrap()
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11), run(12));
}

#[test]
fn verdicts_ship_their_evidence() {
    let grown = divergence_scan(
        0.5,
        &gens("2^"),
        &DivergenceVariant::MnPlusOne,
        &Default::default(),
        &[10],
        &small_config(0),
    )
    .unwrap();
    assert_eq!(grown.verdict, Verdict::Growing);
    assert_eq!(grown.trace.len(), 9);
    assert!(grown.constants["closed_error_N10"] <= 1e-9);

    let bounded = boundedness_scan(
        0.5,
        &gens("2^"),
        BoundedVariant::Mn,
        &[6, 8],
        &small_config(3),
    )
    .unwrap();
    assert_eq!(bounded.verdict, Verdict::Bounded);
    for key in ["quotient_random", "quotient_martingale"] {
        assert!(bounded.constants.contains_key(key), "{key}");
    }
    let per_resolution = bounded.column("N").unwrap();
    assert!(per_resolution.contains(&6.0) && per_resolution.contains(&8.0));
}

#[test]
fn support_measure_bracket_holds_for_walsh() {
    let r = supp_measure_scan(&gens("2^"), 10, &small_config(0)).unwrap();
    assert_eq!(r.verdict, Verdict::Bounded);
    assert_eq!(r.rows.len(), 1023);
}

#[test]
fn scenario_csv_is_rounded_to_twelve_digits() {
    let r = divergence_scan(
        0.5,
        &gens("2^"),
        &DivergenceVariant::MnPlusOne,
        &Default::default(),
        &[8],
        &small_config(0),
    )
    .unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let body: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(body.len(), r.rows.len());
    for (line, row) in body.iter().zip(&r.rows) {
        for (cell, &x) in line.split(',').zip(row) {
            let y: f64 = cell.parse().unwrap();
            assert!(
                (x - y).abs() <= 1e-11 * x.abs().max(1e-300),
                "{cell} vs {x}"
            );
        }
    }
}

#[test]
fn function_csv_round_trip_is_within_twelve_digits() {
    let grid = Grid::new(gens("(2,3,4)^"), 4).unwrap();
    let f = random_function(&grid, &mut stream(5, 4, 0));
    let mut buf = Vec::new();
    f.write_csv(&mut buf, &[]).unwrap();
    let (_, values) = read_csv(buf.as_slice()).unwrap();
    for (a, b) in values.iter().zip(f.values()) {
        assert!((a - b).norm() <= 1e-11 * b.norm().max(1e-300) + 1e-300);
    }
}
