//! Run configuration shared by flags, `key=value` files and artifact headers.
//!
//! A configuration is a set of string pairs until it is resolved: config
//! file entries are overridden by command-line flags, then defaults are
//! filled in and every value is checked. The resolved pairs are written into
//! each artifact, so feeding an artifact back through `--config` reruns the
//! same computation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use vilenkin::experiments::DEFAULT_SEED;
use vilenkin::GeneratorSequence;

/// Prefix of configuration keys embedded in artifacts.
pub const HEADER_PREFIX: &str = "run.";

pub const DEFAULT_OUT: &str = "vilenkin-out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = ConfigError;

            fn from_str(s: &str) -> Result<Self, ConfigError> {
                Self::ALL.iter().copied().find(|v| v.name() == s).ok_or_else(|| {
                    let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
                    bad(format!("unknown {} {s:?} (expected one of {})", $what, names.join(", ")))
                })
            }
        }
    };
}

named_enum!(Command, "command" {
    Transform => "transform",
    Dirichlet => "dirichlet",
    Lebesgue => "lebesgue",
    Atom => "atom",
    Counterexample => "counterexample",
    Scan => "scan",
    Selftest => "selftest",
});

named_enum!(ScanName, "scan" {
    AtomRatio => "atom-ratio",
    Divergence => "divergence",
    Boundedness => "boundedness",
    Simon => "simon",
    Modulus => "modulus",
    SuppMeasure => "supp-measure",
    KernelIdentity => "kernel-identity",
    KernelLower => "kernel-lower",
    KernelUpper => "kernel-upper",
    Lebesgue => "lebesgue",
});

named_enum!(
    /// Artifact file formats.
    Format, "format" {
    Csv => "csv",
    Json => "json",
    Svg => "svg",
    Bin => "bin",
});

impl Command {
    /// Command-specific option keys.
    fn options(self) -> &'static [&'static str] {
        match self {
            Command::Transform => &["input", "inverse"],
            Command::Dirichlet | Command::Selftest => &[],
            Command::Lebesgue => &["limit"],
            Command::Atom => &["input", "rank", "representative", "cells"],
            Command::Counterexample => &["alphas", "rule", "lambdas", "phi"],
            Command::Scan => &[
                "stability_factor",
                "growth_run",
                "growth_total",
                "record_increases",
                "max_cells",
            ],
        }
    }

    fn formats(self) -> (&'static [Format], &'static [Format]) {
        use Format::*;
        match self {
            Command::Transform | Command::Atom => (&[Csv, Bin], &[Csv]),
            Command::Dirichlet | Command::Lebesgue => (&[Csv, Json], &[Csv]),
            Command::Counterexample => (&[Csv, Json], &[Csv, Json]),
            Command::Scan => (&[Csv, Json, Svg], &[Csv, Json, Svg]),
            Command::Selftest => (&[], &[]),
        }
    }
}

impl ScanName {
    fn default_resolutions(self) -> &'static [usize] {
        match self {
            ScanName::AtomRatio => &[6, 8],
            ScanName::Divergence => &[14],
            ScanName::Boundedness => &[8, 10, 12],
            ScanName::Simon => &[8, 10],
            ScanName::Modulus => &[10, 12],
            ScanName::SuppMeasure | ScanName::KernelIdentity | ScanName::KernelLower => &[10],
            ScanName::KernelUpper => &[4, 6, 8],
            ScanName::Lebesgue => &[9],
        }
    }

    /// Options beyond the shared scan thresholds.
    fn options(self) -> &'static [&'static str] {
        match self {
            ScanName::AtomRatio => &["trials", "cells"],
            ScanName::Divergence => &["variant", "alphas", "phi"],
            ScanName::Boundedness => &["trials", "variant"],
            ScanName::Simon => &["trials"],
            ScanName::Modulus => &["variant", "indices"],
            ScanName::KernelLower | ScanName::Lebesgue => &["limit"],
            ScanName::SuppMeasure | ScanName::KernelIdentity | ScanName::KernelUpper => &[],
        }
    }

    fn single_resolution(self) -> bool {
        matches!(
            self,
            ScanName::SuppMeasure
                | ScanName::KernelIdentity
                | ScanName::KernelLower
                | ScanName::Lebesgue
        )
    }
}

/// A resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub scan: Option<ScanName>,
    /// Generator sequence in canonical text form.
    pub m: String,
    /// Resolutions `N`; empty only for `transform`, which reads it from the input.
    pub resolution: Vec<usize>,
    pub n: Option<u64>,
    pub p: f64,
    pub seed: u64,
    pub formats: Vec<Format>,
    pub out: PathBuf,
    pub options: BTreeMap<String, String>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| bad(format!("invalid value {value:?} for {key}")))
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(key, t))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Resolve raw pairs: check keys and values and fill in defaults.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let command: Command = get("command")
            .ok_or_else(|| {
                bad("no command given (use a subcommand or a config file with command=...)")
            })?
            .parse()?;
        let scan = match (command, get("scan")) {
            (Command::Scan, Some(s)) => Some(s.parse::<ScanName>()?),
            (Command::Scan, None) => return Err(bad("scan needs a scenario name")),
            (_, Some(_)) => return Err(bad("scan= is only valid for the scan command")),
            (_, None) => None,
        };
        let m: GeneratorSequence = get("m")
            .unwrap_or("2^")
            .parse()
            .map_err(|e: vilenkin::Error| bad(e.to_string()))?;
        let mut resolution: Vec<usize> = match get("N") {
            Some(v) => parse_list("N", v)?,
            None => Vec::new(),
        };
        if resolution.is_empty() {
            resolution = match (command, scan) {
                (Command::Scan, Some(s)) => s.default_resolutions().to_vec(),
                (Command::Dirichlet, _) => vec![4],
                (Command::Lebesgue, _) => vec![9],
                (Command::Atom, _) => vec![6],
                (Command::Counterexample, _) => vec![10],
                _ => Vec::new(),
            };
        }
        let several_allowed =
            matches!((command, scan), (Command::Scan, Some(s)) if !s.single_resolution());
        if resolution.len() > 1 && !several_allowed {
            return Err(bad(format!("{command} takes a single resolution N")));
        }
        let n = get("n").map(|v| parse::<u64>("n", v)).transpose()?;
        if n.is_some() && command != Command::Dirichlet {
            return Err(bad("n= is only valid for the dirichlet command"));
        }
        if command == Command::Dirichlet && n.is_none() {
            return Err(bad("dirichlet needs an index n"));
        }
        let p = get("p")
            .map(|v| parse::<f64>("p", v))
            .transpose()?
            .unwrap_or(0.5);
        if !(p > 0.0 && p.is_finite()) {
            return Err(bad(format!("p = {p} must be positive")));
        }
        let seed = get("seed")
            .map(|v| parse::<u64>("seed", v))
            .transpose()?
            .unwrap_or(DEFAULT_SEED);
        let (allowed, default) = command.formats();
        let mut formats: Vec<Format> = match get("format") {
            Some(v) => parse_list("format", v)?,
            None => default.to_vec(),
        };
        formats.sort();
        formats.dedup();
        if let Some(f) = formats.iter().find(|f| !allowed.contains(f)) {
            return Err(bad(format!("{command} cannot write {f} artifacts")));
        }
        let out = PathBuf::from(get("out").unwrap_or(DEFAULT_OUT));
        let mut options = BTreeMap::new();
        for (k, v) in pairs {
            if [
                "command", "scan", "m", "N", "n", "p", "seed", "format", "out",
            ]
            .contains(&k.as_str())
            {
                continue;
            }
            let specific = scan.map(ScanName::options).unwrap_or_default();
            if !command.options().contains(&k.as_str()) && !specific.contains(&k.as_str()) {
                let target = scan.map_or(command.to_string(), |s| format!("scan {s}"));
                return Err(bad(format!("unknown setting {k:?} for {target}")));
            }
            options.insert(k.clone(), v.trim().to_string());
        }
        Ok(Self {
            command,
            scan,
            m: m.to_string(),
            resolution,
            n,
            p,
            seed,
            formats,
            out,
            options,
        })
    }

    /// Every setting except the output directory, in a fixed order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![("command".to_string(), self.command.to_string())];
        if let Some(s) = self.scan {
            out.push(("scan".into(), s.to_string()));
        }
        out.push(("m".into(), self.m.clone()));
        if !self.resolution.is_empty() {
            out.push(("N".into(), join(&self.resolution)));
        }
        if let Some(n) = self.n {
            out.push(("n".into(), n.to_string()));
        }
        out.push(("p".into(), self.p.to_string()));
        out.push(("seed".into(), self.seed.to_string()));
        if !self.formats.is_empty() {
            out.push(("format".into(), join(&self.formats)));
        }
        out.extend(self.options.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    /// Header pairs embedded in artifacts.
    pub fn header(&self) -> Vec<(String, String)> {
        self.pairs()
            .into_iter()
            .map(|(k, v)| (format!("{HEADER_PREFIX}{k}"), v))
            .collect()
    }

    /// Header as `# run.key=value` lines.
    pub fn header_text(&self) -> String {
        self.header()
            .iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }

    /// A `key=value` config file, including the output directory.
    pub fn to_config_file(&self) -> String {
        let mut text: String = self
            .pairs()
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        text += &format!("out={}\n", self.out.display());
        text
    }

    pub fn option(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }

    pub fn option_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.option(key).map(|v| parse(key, v)).transpose()
    }

    pub fn option_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.option(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        Ok(self.option_parsed::<bool>(key)?.unwrap_or(false))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// The single resolution of a non-scan command.
    pub fn single_resolution(&self) -> Option<usize> {
        self.resolution.first().copied()
    }
}

/// Raw pairs from a config file or an artifact.
///
/// Three layouts are accepted:
/// - JSON artifacts: the string values of the top-level `"run"` object;
/// - text artifacts (CSV, SVG, `.run` sidecars): the `# run.key=value` lines,
///   everything else ignored;
/// - plain config files: `key=value` lines, with `#` comments and blank lines.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON artifact: {e}")))?;
        let run = value
            .get("run")
            .and_then(|r| r.as_object())
            .ok_or_else(|| bad("JSON artifact has no \"run\" object"))?;
        for (k, v) in run {
            let v = v
                .as_str()
                .ok_or_else(|| bad(format!("run.{k} is not a string")))?;
            pairs.insert(k.clone(), v.to_string());
        }
        return Ok(pairs);
    }
    let header_key = |line: &str| {
        line.strip_prefix('#')
            .map(str::trim_start)
            .and_then(|l| l.strip_prefix(HEADER_PREFIX))
            .map(str::to_string)
    };
    let is_artifact = text.lines().any(|l| header_key(l.trim()).is_some());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let entry = if is_artifact {
            match header_key(line) {
                Some(entry) => entry,
                None => continue,
            }
        } else {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            line.strip_prefix(HEADER_PREFIX).unwrap_or(line).to_string()
        };
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
        pairs.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> BTreeMap<String, String> {
        items
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_are_filled_in() {
        let cfg =
            RunConfig::from_pairs(&pairs(&[("command", "scan"), ("scan", "divergence")])).unwrap();
        assert_eq!(cfg.resolution, [14]);
        assert_eq!(cfg.m, "2^");
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.formats, [Format::Csv, Format::Json, Format::Svg]);
    }

    #[test]
    fn generator_text_is_canonical() {
        let cfg = RunConfig::from_pairs(&pairs(&[("command", "lebesgue"), ("m", " ( 2, 3 )^ ")]))
            .unwrap();
        assert_eq!(cfg.m, "(2,3)^");
    }

    #[test]
    fn misplaced_settings_are_rejected() {
        for bad in [
            pairs(&[("command", "lebesgue"), ("trials", "3")]),
            pairs(&[("command", "scan"), ("scan", "simon"), ("variant", "mn")]),
            pairs(&[("command", "lebesgue"), ("N", "4,5")]),
            pairs(&[("command", "dirichlet")]),
            pairs(&[("command", "scan")]),
            pairs(&[
                ("command", "scan"),
                ("scan", "divergence"),
                ("format", "bin"),
            ]),
            pairs(&[("command", "atom"), ("p", "-1")]),
            pairs(&[("command", "atom"), ("m", "1^")]),
        ] {
            assert!(RunConfig::from_pairs(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn artifact_headers_ignore_their_payload() {
        let text = "# run.command=dirichlet\n# run.n=8\n# m=ignored\nindex,re,im\n0,8,0\n";
        let p = parse_config_text(text).unwrap();
        assert_eq!(p, pairs(&[("command", "dirichlet"), ("n", "8")]));
        let svg = "<!--\n# run.command=selftest\n-->\n<svg xmlns=\"x\"></svg>\n";
        assert_eq!(
            parse_config_text(svg).unwrap(),
            pairs(&[("command", "selftest")])
        );
    }

    #[test]
    fn plain_files_must_be_well_formed() {
        assert!(parse_config_text("command=selftest\nnonsense\n").is_err());
        let p = parse_config_text("# comment\n\ncommand = selftest\nrun.seed=4\n").unwrap();
        assert_eq!(p, pairs(&[("command", "selftest"), ("seed", "4")]));
    }
}
