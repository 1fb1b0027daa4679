//! Command implementations. Each command reads a resolved [`RunConfig`],
//! writes its artifacts and returns the lines to print.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use vilenkin::experiments::{
    atom_ratio_scan, boundedness_scan, divergence_scan, kernel_identity_scan, lebesgue_scan,
    lower_kernel_scan, modulus_convergence_scan, random_atom, simon_scan, stream,
    supp_measure_scan, upper_kernel_scan, AtomCells, BoundedVariant, DivergenceVariant,
    ModulusFunction, ModulusIndices, ScanConfig, ScenarioResult, Verdict, DEFAULT_SCAN_CELLS,
};
use vilenkin::io::{fmt_sig12, read_binary, read_csv, write_binary, write_csv, PayloadKind, MAGIC};
use vilenkin::martingale::{
    build_counterexample, default_alphas, validate_atom, Coset, LambdaRule, PhiRule,
};
use vilenkin::norms::{lebesgue_table, select_convention, NormReport};
use vilenkin::transform::{dirichlet_closed, dirichlet_direct, forward, inverse};
use vilenkin::{DigitConvention, GeneratorSequence, Grid, GridFunction, SpectralVector};

use crate::config::{Command, ConfigError, Format, RunConfig, ScanName};

/// Tolerance for the identity checks reported by `dirichlet` and `counterexample`.
pub const CHECK_TOL: f64 = 1e-9;

/// An input or usage problem; reported with exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<vilenkin::Error> for CliError {
    fn from(e: vilenkin::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

/// What a command printed and wrote.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    /// A check failed or a scan reported a violated verdict.
    pub violated: bool,
}

impl Report {
    fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    fn write(&mut self, cfg: &RunConfig, name: &str, bytes: &[u8]) -> Result<()> {
        fs::create_dir_all(&cfg.out)
            .map_err(|e| usage(format!("cannot create {}: {e}", cfg.out.display())))?;
        let path = cfg.out.join(name);
        fs::write(&path, bytes)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(path);
        Ok(())
    }

    /// `payload` wrapped as `{"run": {...}, key: payload}`.
    fn write_json(
        &mut self,
        cfg: &RunConfig,
        name: &str,
        fields: Map<String, Value>,
    ) -> Result<()> {
        let run: Map<String, Value> = cfg
            .pairs()
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let mut doc = Map::new();
        doc.insert("run".into(), Value::Object(run));
        doc.extend(fields);
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        self.write(cfg, name, text.as_bytes())
    }

    fn write_values(
        &mut self,
        cfg: &RunConfig,
        stem: &str,
        kind: PayloadKind,
        grid: &Grid,
        values: &[Complex64],
    ) -> Result<()> {
        if cfg.wants(Format::Csv) {
            let mut header = cfg.header();
            header.push(("m".into(), grid.generators().to_string()));
            header.push(("N".into(), grid.resolution().to_string()));
            let mut buf = Vec::new();
            write_csv(&mut buf, &header, values)?;
            self.write(cfg, &format!("{stem}.csv"), &buf)?;
        }
        if cfg.wants(Format::Bin) {
            let mut buf = Vec::new();
            write_binary(&mut buf, kind, grid, values)?;
            self.write(cfg, &format!("{stem}.bin"), &buf)?;
            self.write(
                cfg,
                &format!("{stem}.bin.run"),
                cfg.header_text().as_bytes(),
            )?;
        }
        Ok(())
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Transform => transform(cfg),
        Command::Dirichlet => dirichlet(cfg),
        Command::Lebesgue => lebesgue(cfg),
        Command::Atom => atom(cfg),
        Command::Counterexample => counterexample(cfg),
        Command::Scan => scan(cfg),
        Command::Selftest => Ok(selftest()),
    }
}

fn generators(cfg: &RunConfig) -> Result<Arc<GeneratorSequence>> {
    Ok(Arc::new(cfg.m.parse()?))
}

fn grid(cfg: &RunConfig) -> Result<Grid> {
    let n = cfg
        .single_resolution()
        .ok_or_else(|| usage("no resolution N given"))?;
    Ok(Grid::new(generators(cfg)?, n)?)
}

/// Values of a function or spectrum file. Binary files carry their grid;
/// CSV files are placed on `m` at resolution `N`, or at the resolution
/// matching their length when `N` is not given.
fn read_values(
    cfg: &RunConfig,
    path: &Path,
) -> Result<(Option<PayloadKind>, Grid, Vec<Complex64>)> {
    let bytes =
        fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        let (kind, grid, values) = read_binary(&mut bytes.as_slice())?;
        return Ok((Some(kind), grid, values));
    }
    let (_, values) = read_csv(bytes.as_slice())?;
    let gens = generators(cfg)?;
    let resolution = match cfg.single_resolution() {
        Some(n) => n,
        None => (0..=64)
            .take_while(|&k| {
                gens.check_resolution(k).is_ok() && gens.base(k) <= values.len() as u64
            })
            .find(|&k| gens.base(k) == values.len() as u64)
            .ok_or_else(|| {
                usage(format!(
                    "{} values is not a scaled base of {}",
                    values.len(),
                    cfg.m
                ))
            })?,
    };
    let grid = Grid::new(gens, resolution)?;
    if values.len() != grid.size() {
        return Err(usage(format!(
            "{} holds {} values but M_{resolution} = {}",
            path.display(),
            values.len(),
            grid.size()
        )));
    }
    Ok((None, grid, values))
}

fn input_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.option("input").map(PathBuf::from)
}

fn transform(cfg: &RunConfig) -> Result<Report> {
    let path = input_path(cfg).ok_or_else(|| usage("transform needs --input"))?;
    let inverse_direction = cfg.flag("inverse")?;
    let (kind, grid, values) = read_values(cfg, &path)?;
    let expected = if inverse_direction {
        PayloadKind::Spectrum
    } else {
        PayloadKind::Function
    };
    if kind.is_some_and(|k| k != expected) {
        return Err(usage(format!(
            "{} holds a {kind:?} payload, expected {expected:?}",
            path.display()
        )));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    let mut report = Report::default();
    let (out_kind, out_values, label) = if inverse_direction {
        let f = inverse(&SpectralVector::new(grid.clone(), values)?);
        (PayloadKind::Function, f.into_values(), "function")
    } else {
        let s = forward(&GridFunction::new(grid.clone(), values)?);
        (PayloadKind::Spectrum, s.coeffs().to_vec(), "spectrum")
    };
    report.line(format!(
        "{} transform of {} on {} at N = {} ({} values)",
        if inverse_direction {
            "inverse"
        } else {
            "forward"
        },
        path.display(),
        grid.generators(),
        grid.resolution(),
        grid.size()
    ));
    report.write_values(
        cfg,
        &format!("{stem}.{label}"),
        out_kind,
        &grid,
        &out_values,
    )?;
    Ok(report)
}

fn dirichlet(cfg: &RunConfig) -> Result<Report> {
    let grid = grid(cfg)?;
    let n = cfg.n.ok_or_else(|| usage("dirichlet needs --n"))? as usize;
    let direct = dirichlet_direct(&grid, n)?;
    let closed_error = direct.max_abs_diff(&dirichlet_closed(&grid, n)?);
    let mut report = Report::default();
    report.line(format!(
        "D_{n} on {} at N = {}",
        grid.generators(),
        grid.resolution()
    ));
    report.line(format!(
        "closed form: max |difference| = {closed_error:.3e}"
    ));
    let mut ok = closed_error <= CHECK_TOL;
    let level = (0..=grid.resolution()).find(|&k| grid.base(k) == n);
    let indicator_error = level.map(|k| {
        let mk = grid.base(k);
        let expected = GridFunction::from_fn(&grid, |i| {
            Complex64::new(if i % mk == 0 { mk as f64 } else { 0.0 }, 0.0)
        });
        let err = direct.max_abs_diff(&expected);
        report.line(format!(
            "n = M_{k}: D_n = M_{k} 1_(I_{k}), max |difference| = {err:.3e}"
        ));
        err
    });
    ok &= indicator_error.is_none_or(|e| e <= CHECK_TOL);
    report.violated = !ok;
    report.line(if ok { "checks: pass" } else { "checks: FAIL" });
    let stem = format!("dirichlet_n{n}");
    report.write_values(cfg, &stem, PayloadKind::Function, &grid, direct.values())?;
    if cfg.wants(Format::Json) {
        let mut fields = Map::new();
        fields.insert("n".into(), json!(n));
        fields.insert("N".into(), json!(grid.resolution()));
        fields.insert("closed_error".into(), json!(closed_error));
        fields.insert("indicator_error".into(), json!(indicator_error));
        fields.insert(
            "values".into(),
            json!(direct
                .values()
                .iter()
                .map(|v| [v.re, v.im])
                .collect::<Vec<_>>()),
        );
        report.write_json(cfg, &format!("{stem}.json"), fields)?;
    }
    Ok(report)
}

fn lebesgue(cfg: &RunConfig) -> Result<Report> {
    let n = cfg
        .single_resolution()
        .ok_or_else(|| usage("no resolution N given"))?;
    let grid = Grid::with_cap(generators(cfg)?, n, DEFAULT_SCAN_CELLS)?;
    let limit = cfg.option_parsed::<usize>("limit")?.unwrap_or(grid.size());
    let verdict = select_convention(&grid, limit);
    let fewest = verdict
        .violations
        .iter()
        .min_by_key(|(_, bad)| bad.len())
        .map(|(c, _)| *c)
        .unwrap_or(DigitConvention::FromZero);
    let convention = verdict.winner.unwrap_or(fewest);
    let rows = lebesgue_table(&grid, limit, convention);
    let mut report = Report::default();
    let counts: Vec<String> = verdict
        .violations
        .iter()
        .map(|(c, bad)| format!("{} {}", c.name(), bad.len()))
        .collect();
    report.line(format!(
        "{} rows on {} at N = {}; convention {} (bracket violations: {})",
        rows.len(),
        grid.generators(),
        n,
        convention.name(),
        counts.join(", ")
    ));
    if verdict.winner.is_none() {
        report.violated = true;
        report.line("no convention keeps every constant inside its bracket");
    }
    if let Some(top) = rows.iter().max_by(|a, b| a.value.total_cmp(&b.value)) {
        report.line(format!(
            "largest L_n = {} at n = {}",
            fmt_sig12(top.value),
            top.n
        ));
    }
    if cfg.wants(Format::Csv) {
        let mut text = cfg.header_text();
        text += &format!("# convention={}\n", convention.name());
        for (c, bad) in &verdict.violations {
            text += &format!("# violations_{}={}\n", c.name(), bad.len());
        }
        text += NormReport::CSV_HEADER;
        text.push('\n');
        for r in &rows {
            text += &r.to_norm_report().csv_row();
            text.push('\n');
        }
        report.write(cfg, "lebesgue.csv", text.as_bytes())?;
    }
    if cfg.wants(Format::Json) {
        let mut fields = Map::new();
        fields.insert("convention".into(), json!(convention.name()));
        let violations: Map<String, Value> = verdict
            .violations
            .iter()
            .map(|(c, bad)| (c.name().to_string(), json!(bad)))
            .collect();
        fields.insert("violations".into(), Value::Object(violations));
        fields.insert("rows".into(), serde_json::to_value(&rows)?);
        report.write_json(cfg, "lebesgue.json", fields)?;
    }
    Ok(report)
}

fn atom(cfg: &RunConfig) -> Result<Report> {
    let rank = cfg.option_parsed::<usize>("rank")?.unwrap_or(1);
    let representative = cfg.option_parsed::<usize>("representative")?.unwrap_or(0);
    let mut report = Report::default();
    if let Some(path) = input_path(cfg) {
        let (_, grid, values) = read_values(cfg, &path)?;
        if rank > grid.resolution() {
            return Err(usage(format!(
                "rank {rank} exceeds the resolution {}",
                grid.resolution()
            )));
        }
        let support = Coset {
            rank,
            representative: representative % grid.base(rank),
        };
        let f = GridFunction::new(grid, values)?;
        match validate_atom(&f, cfg.p, support) {
            Ok(a) => report.line(format!(
                "{}: a {}-atom supported on the rank-{} coset of {} (sup {})",
                path.display(),
                cfg.p,
                a.support_rank(),
                support.representative,
                fmt_sig12(a.values().sup_norm())
            )),
            Err(vilenkin::Error::NotAnAtom(violations)) => {
                report.violated = true;
                report.line(format!("{}: not a {}-atom", path.display(), cfg.p));
                for v in violations {
                    report.line(format!("  {v}"));
                }
            }
            Err(e) => return Err(e.into()),
        }
        return Ok(report);
    }
    let grid = grid(cfg)?;
    let cells: AtomCells = cfg.option_parsed("cells")?.unwrap_or_default();
    let a = random_atom(
        &grid,
        cfg.p,
        rank,
        representative,
        cells,
        &mut stream(cfg.seed, grid.resolution(), 0),
    )?;
    report.line(format!(
        "random {}-atom on the rank-{rank} coset of {} at N = {} (sup {})",
        cfg.p,
        a.support().representative,
        grid.resolution(),
        fmt_sig12(a.values().sup_norm())
    ));
    report.write_values(
        cfg,
        "atom",
        PayloadKind::Function,
        &grid,
        a.values().values(),
    )?;
    Ok(report)
}

fn counterexample(cfg: &RunConfig) -> Result<Report> {
    let grid = grid(cfg)?;
    let alphas = match cfg.option_list::<u64>("alphas")? {
        Some(a) => a,
        None => default_alphas(grid.generators(), grid.resolution()),
    };
    let rule = match cfg.option("rule").unwrap_or("divergence") {
        "divergence" => LambdaRule::Divergence,
        "modulus_sharpness" => LambdaRule::ModulusSharpness,
        "explicit" => LambdaRule::Explicit(
            cfg.option_list::<f64>("lambdas")?
                .ok_or_else(|| usage("rule explicit needs --lambdas"))?,
        ),
        other => {
            return Err(usage(format!(
                "unknown rule {other:?} (expected divergence, modulus_sharpness or explicit)"
            )))
        }
    };
    if cfg.option("lambdas").is_some() && !matches!(rule, LambdaRule::Explicit(_)) {
        return Err(usage("--lambdas needs --rule explicit"));
    }
    let phi = cfg.option_parsed::<PhiRule>("phi")?;
    let spec = build_counterexample(cfg.p, &alphas, rule, phi, &grid)?;
    let coefficients = spec.expected_coefficients();
    let spectrum = forward(spec.realized());
    let error = spectrum
        .coeffs()
        .iter()
        .zip(&coefficients)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let mut report = Report::default();
    let realized: Vec<u64> = spec
        .realized_terms()
        .map(|k| spec.alphas()[k].value())
        .collect();
    report.line(format!(
        "{} martingale on {} at N = {}, p = {}: realized alpha {realized:?}",
        spec.rule().name(),
        grid.generators(),
        grid.resolution(),
        cfg.p
    ));
    report.line(format!(
        "budget sum |lambda_k|^p = {}",
        fmt_sig12(spec.budget())
    ));
    report.line(format!(
        "coefficients against the spectrum: max |difference| = {error:.3e}"
    ));
    report.violated = error > CHECK_TOL;
    if cfg.wants(Format::Csv) {
        let mut buf = Vec::new();
        let mut header = cfg.header();
        header.push(("m".into(), grid.generators().to_string()));
        header.push(("N".into(), grid.resolution().to_string()));
        write_csv(&mut buf, &header, &coefficients)?;
        report.write(cfg, "counterexample_coefficients.csv", &buf)?;
    }
    if cfg.wants(Format::Json) {
        let mut fields = Map::new();
        fields.insert("martingale".into(), serde_json::to_value(spec.to_record())?);
        fields.insert("budget".into(), json!(spec.budget()));
        fields.insert("spectrum_error".into(), json!(error));
        report.write_json(cfg, "counterexample.json", fields)?;
    }
    Ok(report)
}

fn scan_config(cfg: &RunConfig) -> Result<ScanConfig> {
    let d = ScanConfig::default();
    Ok(ScanConfig {
        seed: cfg.seed,
        trials: cfg.option_parsed("trials")?.unwrap_or(d.trials),
        stability_factor: cfg
            .option_parsed("stability_factor")?
            .unwrap_or(d.stability_factor),
        growth_run: cfg.option_parsed("growth_run")?.unwrap_or(d.growth_run),
        growth_total: cfg.option_parsed("growth_total")?.unwrap_or(d.growth_total),
        record_increases: cfg
            .option_parsed("record_increases")?
            .unwrap_or(d.record_increases),
        max_cells: cfg.option_parsed("max_cells")?.unwrap_or(d.max_cells),
    })
}

fn run_scan(cfg: &RunConfig, name: ScanName) -> Result<ScenarioResult> {
    let gens = generators(cfg)?;
    let sc = scan_config(cfg)?;
    let res = &cfg.resolution;
    let first = res[0];
    let p = cfg.p;
    let result = match name {
        ScanName::AtomRatio => {
            let cells: AtomCells = cfg.option_parsed("cells")?.unwrap_or_default();
            atom_ratio_scan(p, &gens, res, cells, &sc)
        }
        ScanName::Divergence => {
            let alphas = cfg.option_list::<u64>("alphas")?;
            let variant = match (cfg.option("variant").unwrap_or("general"), alphas) {
                ("general", alphas) => DivergenceVariant::General(alphas),
                ("mn_plus_1", None) => DivergenceVariant::MnPlusOne,
                ("mn_plus_1", Some(_)) => return Err(usage("--alphas needs --variant general")),
                (other, _) => {
                    return Err(usage(format!(
                        "unknown divergence variant {other:?} (expected general or mn_plus_1)"
                    )))
                }
            };
            let phi: PhiRule = cfg.option_parsed("phi")?.unwrap_or_default();
            divergence_scan(p, &gens, &variant, &phi, res, &sc)
        }
        ScanName::Boundedness => {
            let variant: BoundedVariant = match cfg.option("variant") {
                Some(v) => v.parse()?,
                None => BoundedVariant::Mn,
            };
            boundedness_scan(p, &gens, variant, res, &sc)
        }
        ScanName::Simon => simon_scan(p, &gens, res, &sc),
        ScanName::Modulus => {
            let function: ModulusFunction = match cfg.option("variant") {
                Some(v) => v.parse()?,
                None => ModulusFunction::Sharpness,
            };
            let indices: ModulusIndices = match cfg.option("indices") {
                Some(v) => v.parse()?,
                None => ModulusIndices::Alphas,
            };
            modulus_convergence_scan(p, &gens, function, indices, res, &sc)
        }
        ScanName::SuppMeasure => supp_measure_scan(&gens, first, &sc),
        ScanName::KernelIdentity => kernel_identity_scan(&gens, first, &sc),
        ScanName::KernelLower => {
            let limit = cfg.option_parsed("limit")?.unwrap_or(1024);
            lower_kernel_scan(&gens, first, limit, &sc)
        }
        ScanName::KernelUpper => upper_kernel_scan(&gens, res, &sc),
        ScanName::Lebesgue => {
            let limit = cfg.option_parsed("limit")?.unwrap_or(512);
            lebesgue_scan(&gens, first, limit, &sc)
        }
    };
    Ok(result?)
}

fn scan(cfg: &RunConfig) -> Result<Report> {
    let name = cfg
        .scan
        .ok_or_else(|| usage("scan needs a scenario name"))?;
    let result = run_scan(cfg, name)?;
    let mut report = Report::default();
    report.line(format!(
        "{name}: {} ({} rows)",
        result.verdict,
        result.rows.len()
    ));
    for (k, v) in &result.constants {
        report.line(format!("  {k} = {}", fmt_sig12(*v)));
    }
    if !result.trace.is_empty() {
        let trace: Vec<String> = result.trace.iter().map(|v| fmt_sig12(*v)).collect();
        report.line(format!(
            "  trace ({}): {}",
            result.trace_label,
            trace.join(", ")
        ));
    }
    for note in &result.notes {
        report.line(format!("  note: {note}"));
    }
    report.violated = result.verdict == Verdict::Violated;
    if cfg.wants(Format::Csv) {
        let mut buf = cfg.header_text().into_bytes();
        result.write_csv(&mut buf)?;
        report.write(cfg, &format!("{name}.csv"), &buf)?;
    }
    if cfg.wants(Format::Json) {
        let mut fields = Map::new();
        fields.insert("result".into(), serde_json::to_value(&result)?);
        report.write_json(cfg, &format!("{name}.json"), fields)?;
    }
    if cfg.wants(Format::Svg) {
        match result.trace_svg() {
            Some(svg) => {
                let text = format!("<!--\n{}-->\n{svg}", cfg.header_text());
                report.write(cfg, &format!("{name}.svg"), text.as_bytes())?;
            }
            None => report.line("  (no trace to plot)"),
        }
    }
    Ok(report)
}

fn selftest() -> Report {
    let mut report = Report::default();
    for check in vilenkin::selftest::run() {
        if check.passed {
            report.line(format!("PASS {}", check.name));
        } else {
            report.violated = true;
            report.line(format!("FAIL {}: {}", check.name, check.detail));
        }
    }
    report
}
