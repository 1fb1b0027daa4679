//! Named checks of small closed-form examples, run by `vilenkin selftest`.

use num_complex::Complex64;

use crate::experiments::simon_sum;
use crate::group::{DigitConvention, GeneratorSequence, GroupPoint};
use crate::martingale::{
    build_counterexample, counterexample_atom, validate_atom, Coset, LambdaRule,
};
use crate::norms::{
    hardy_norm, lebesgue_constant, lp_norm, maximal_function, modulus_hp, restricted_maximal,
    weak_lp,
};
use crate::transform::{dirichlet_direct, forward, partial_sum, Grid, GridFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(), String>;
type NamedCheck = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn close(a: f64, b: f64, tol: f64) -> Outcome {
    ensure((a - b).abs() <= tol, || format!("{a} != {b}"))
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

fn grid(text: &str, n: usize) -> Result<Grid, String> {
    let m: GeneratorSequence = text.parse().map_err(err)?;
    Grid::new(m, n).map_err(err)
}

fn sample(g: &Grid) -> GridFunction {
    GridFunction::from_fn(g, |i| {
        Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())
    })
}

fn scaled_bases() -> Outcome {
    for (text, expected) in [("2,2,2", vec![1, 2, 4, 8]), ("2,3,4", vec![1, 2, 6, 24])] {
        let m: GeneratorSequence = text.parse().map_err(err)?;
        let got = m.scaled_bases(3).map_err(err)?;
        ensure(got == expected.as_slice(), || format!("{text}: {got:?}"))?;
    }
    Ok(())
}

fn walsh_variation() -> Outcome {
    let w = GeneratorSequence::walsh();
    for (n, v) in [(1, 1), (5, 3)] {
        let var = w
            .decompose(n)
            .map_err(err)?
            .variation(&w, DigitConvention::FromOne);
        ensure(var.v == v && var.v_star == 0, || format!("n={n}: {var:?}"))?;
    }
    Ok(())
}

fn group_laws() -> Outcome {
    let w = GeneratorSequence::walsh();
    let x = GroupPoint::new(vec![1, 0, 1, 1], &w).map_err(err)?;
    ensure(w.add(&x, &x).map_err(err)?.is_origin(), || {
        "x ⊕ x ≠ 0".into()
    })?;
    let m: GeneratorSequence = "3,2".parse().map_err(err)?;
    let y = GroupPoint::new(vec![2, 1], &m).map_err(err)?;
    let sum = m.add(&y, &y).map_err(err)?;
    ensure(sum.coords() == [1, 0], || format!("{:?}", sum.coords()))?;
    ensure(m.sub(&y, &y).map_err(err)?.is_origin(), || {
        "x ⊖ x ≠ 0".into()
    })
}

fn characters() -> Outcome {
    let w = grid("2^", 3)?;
    ensure(
        w.character_values(0)
            .map_err(err)?
            .iter()
            .all(|v| *v == Complex64::new(1.0, 0.0)),
        || "ψ_0 ≠ 1".into(),
    )?;
    for (i, v) in w.character_values(1).map_err(err)?.iter().enumerate() {
        let sign = if w.point(i).coords()[0] == 0 {
            1.0
        } else {
            -1.0
        };
        close(v.re, sign, 0.0)?;
    }
    let t = grid("3^", 2)?;
    let v = t.character_at(1, 1);
    let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    close((v - e).norm(), 0.0, 1e-15)
}

fn orthonormal_spectra() -> Outcome {
    let g = grid("(2,3)^", 4)?;
    let one = forward(&GridFunction::constant(&g, Complex64::new(1.0, 0.0)));
    close(one.coeffs()[0].re, 1.0, 1e-12)?;
    close(
        one.coeffs()[1..]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max),
        0.0,
        1e-12,
    )?;
    for j in [1, 5, 17] {
        let s = forward(&GridFunction::character(&g, j).map_err(err)?);
        for (n, c) in s.coeffs().iter().enumerate() {
            close(c.re, f64::from(u8::from(n == j)), 1e-12)?;
            close(c.im, 0.0, 1e-12)?;
        }
    }
    Ok(())
}

fn kernels_and_partial_sums() -> Outcome {
    let g = grid("(2,3,4)^", 4)?;
    let d1 = dirichlet_direct(&g, 1).map_err(err)?;
    close(
        d1.max_abs_diff(&GridFunction::constant(&g, Complex64::new(1.0, 0.0))),
        0.0,
        0.0,
    )?;
    let f = sample(&g);
    close(
        partial_sum(&f, g.size()).map_err(err)?.max_abs_diff(&f),
        0.0,
        1e-12,
    )?;
    let psi = GridFunction::character(&g, 7).map_err(err)?;
    close(
        partial_sum(&psi, 8).map_err(err)?.max_abs_diff(&psi),
        0.0,
        1e-12,
    )?;
    close(partial_sum(&psi, 7).map_err(err)?.sup_norm(), 0.0, 1e-12)
}

fn lp_examples() -> Outcome {
    let g = grid("(2,3)^", 4)?;
    let c = GridFunction::constant(&g, Complex64::new(3.0, 4.0));
    for p in [0.5, 1.0, 2.0] {
        close(lp_norm(&c, p).map_err(err)?, 5.0, 1e-12)?;
        close(weak_lp(&c, p).map_err(err)?, 5.0, 1e-10)?;
    }
    for k in 0..=4 {
        let d = dirichlet_direct(&g, g.base(k)).map_err(err)?;
        close(lp_norm(&d, 1.0).map_err(err)?, 1.0, 1e-12)?;
        let mk = g.base(k) as f64;
        close(
            lp_norm(&d, 0.5).map_err(err)?,
            mk.powf(1.0 - 2.0),
            1e-12 * mk,
        )?;
    }
    let w = grid("2^", 3)?;
    let indicator =
        GridFunction::from_fn(&w, |i| Complex64::new(f64::from(u8::from(i % 2 == 0)), 0.0));
    for p in [0.5, 1.0] {
        close(
            weak_lp(&indicator, p).map_err(err)?,
            0.5f64.powf(1.0 / p),
            1e-10,
        )?;
    }
    Ok(())
}

fn lebesgue_examples() -> Outcome {
    let g = grid("(2,3)^", 5)?;
    let c = DigitConvention::FromZero;
    close(lebesgue_constant(&g, 1, c).map_err(err)?.value, 1.0, 1e-12)?;
    for k in 0..=5 {
        close(
            lebesgue_constant(&g, g.base(k), c).map_err(err)?.value,
            1.0,
            1e-9,
        )?;
    }
    close(
        lebesgue_constant(&grid("2^", 2)?, 3, c).map_err(err)?.value,
        1.5,
        1e-12,
    )
}

fn hardy_examples() -> Outcome {
    let g = grid("2^", 5)?;
    let one = GridFunction::constant(&g, Complex64::new(1.0, 0.0));
    close(hardy_norm(&one, 0.5).map_err(err)?, 1.0, 1e-12)?;
    let f = sample(&g);
    for p in [0.5, 1.0] {
        ensure(
            hardy_norm(&f, p).map_err(err)? >= lp_norm(&f, p).map_err(err)? - 1e-12,
            || "H_p below L_p".into(),
        )?;
    }
    let top = restricted_maximal(&f, &[g.size()]).map_err(err)?;
    close(
        top.values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a.re - b.norm()).abs())
            .fold(0.0, f64::max),
        0.0,
        1e-12,
    )?;
    let bases: Vec<usize> = (0..=5).map(|k| g.base(k)).collect();
    let star = restricted_maximal(&f, &bases).map_err(err)?;
    let direct = maximal_function(&f);
    close(
        star.values()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a.re - b).abs())
            .fold(0.0, f64::max),
        0.0,
        1e-12,
    )
}

fn modulus_examples() -> Outcome {
    let g = grid("(2,3)^", 5)?;
    let f = sample(&g);
    close(modulus_hp(&f, 5, 0.5).map_err(err)?, 0.0, 1e-12)?;
    let psi = GridFunction::character(&g, g.base(3)).map_err(err)?;
    let whole = hardy_norm(&psi, 0.5).map_err(err)?;
    for n in 0..=3 {
        close(modulus_hp(&psi, n, 0.5).map_err(err)?, whole, 1e-12)?;
    }
    Ok(())
}

fn atom_examples() -> Outcome {
    let g = grid("2^", 5)?;
    let one = GridFunction::constant(&g, Complex64::new(1.0, 0.0));
    ensure(validate_atom(&one, 0.5, Coset::origin(0)).is_err(), || {
        "1 accepted as an atom".into()
    })?;
    let alpha = g.generators().decompose(5).map_err(err)?;
    let atom = counterexample_atom(&alpha, 0.5, &g).map_err(err)?;
    close(atom.values().integral().norm(), 0.0, 1e-12)?;
    let spec =
        build_counterexample(0.5, &[5], LambdaRule::Explicit(vec![1.0]), None, &g).map_err(err)?;
    close(spec.realized().max_abs_diff(atom.values()), 0.0, 0.0)?;
    ensure(
        hardy_norm(spec.realized(), 0.5).map_err(err)?.is_finite(),
        || "infinite norm".into(),
    )
}

fn simon_constant() -> Outcome {
    let g = grid("2^", 6)?;
    let one = GridFunction::constant(&g, Complex64::new(1.0, 0.0));
    let s = simon_sum(&one, 0.5).map_err(err)?;
    let oracle: f64 = (1..=64).map(|k| 1.0 / (k as f64).powf(1.5)).sum();
    close(s.sum, oracle, 1e-12)?;
    close(s.ratio, oracle, 1e-12)
}

/// Run every check.
pub fn run() -> Vec<Check> {
    let checks: [NamedCheck; 14] = [
        ("scaled bases", scaled_bases),
        ("Walsh variation", walsh_variation),
        ("group laws", group_laws),
        ("characters", characters),
        ("orthonormal spectra", orthonormal_spectra),
        ("kernels and partial sums", kernels_and_partial_sums),
        ("L_p and weak L_p", lp_examples),
        ("Lebesgue constants", lebesgue_examples),
        ("Hardy norm and maximal operators", hardy_examples),
        ("modulus of continuity", modulus_examples),
        ("atoms", atom_examples),
        ("Simon sum of a constant", simon_constant),
        ("zero index has no digits", || {
            ensure(GeneratorSequence::walsh().decompose(0).is_err(), || {
                "0 decomposed".into()
            })
        }),
        ("kernel beyond resolution", || {
            ensure(dirichlet_direct(&grid("2^", 3)?, 9).is_err(), || {
                "D_9 at N = 3".into()
            })
        }),
    ];
    checks
        .into_iter()
        .map(|(name, check)| match check() {
            Ok(()) => Check {
                name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => Check {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}
