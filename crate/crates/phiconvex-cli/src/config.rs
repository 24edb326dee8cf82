//! Flat `key = value` config files mirroring the flag names. `#` starts a
//! comment, blank lines are skipped, keys are validated against the full
//! flag vocabulary, and values stay raw strings until a command claims
//! them. Explicit flags always beat file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::args::{Cli, CommandArgs, ProblemArgs, SpaceArgs};
use crate::error::CliError;

const KNOWN_KEYS: &[&str] = &[
    "command", "json", "grid", "t-steps", "refine", "tol", "quad-tol", "seed", "workers", "f",
    "g", "phi", "a", "b", "box", "dim", "c", "norm", "sampler", "samples", "budget",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", idx + 1)));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", idx + 1)));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Config::parse(&text)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("key `{key}`: cannot parse value `{raw}`"))
            }),
        }
    }

    /// The command named in the file, if any.
    pub fn command(&self) -> Result<Option<CommandArgs>, CliError> {
        let Some(name) = self.raw("command") else {
            return Ok(None);
        };
        let cmd = match name {
            "check" => CommandArgs::Check(ProblemArgs::default()),
            "midcheck" => CommandArgs::Midcheck(ProblemArgs::default()),
            "modulus" => CommandArgs::Modulus(ProblemArgs::default()),
            "hh" => CommandArgs::Hh(ProblemArgs::default()),
            "product" => CommandArgs::Product(ProblemArgs::default()),
            "pair-product" => CommandArgs::PairProduct(ProblemArgs::default()),
            "norm-test" => CommandArgs::NormTest(SpaceArgs::default()),
            "sqnorm-check" => CommandArgs::SqnormCheck(SpaceArgs::default()),
            "counterexample" => CommandArgs::Counterexample(SpaceArgs::default()),
            "lemma2" => CommandArgs::Lemma2(ProblemArgs::default()),
            other => {
                return Err(CliError::Config(format!("unknown command `{other}`")));
            }
        };
        Ok(Some(cmd))
    }

    pub fn fill_global(&self, cli: &mut Cli) -> Result<(), CliError> {
        if cli.json.is_none() {
            cli.json = self.raw("json").map(PathBuf::from);
        }
        fill(&mut cli.grid, self.typed("grid")?);
        fill(&mut cli.t_steps, self.typed("t-steps")?);
        fill(&mut cli.refine, self.typed("refine")?);
        fill(&mut cli.tol, self.typed("tol")?);
        fill(&mut cli.quad_tol, self.typed("quad-tol")?);
        fill(&mut cli.seed, self.typed("seed")?);
        fill(&mut cli.workers, self.typed("workers")?);
        Ok(())
    }

    pub fn fill_problem(&self, p: &mut ProblemArgs) -> Result<(), CliError> {
        if p.f.is_none() {
            p.f = self.raw("f").map(String::from);
        }
        if p.g.is_none() {
            p.g = self.raw("g").map(String::from);
        }
        if p.phi.is_empty() {
            if let Some(raw) = self.raw("phi") {
                p.phi = raw.split(';').map(|s| s.trim().to_string()).collect();
            }
        }
        fill(&mut p.a, self.typed("a")?);
        fill(&mut p.b, self.typed("b")?);
        if p.box_bounds.is_none() {
            p.box_bounds = self.raw("box").map(String::from);
        }
        fill(&mut p.dim, self.typed("dim")?);
        if p.c.is_none() {
            p.c = self.raw("c").map(String::from);
        }
        if p.norm.is_none() {
            p.norm = self.raw("norm").map(String::from);
        }
        fill(&mut p.samples, self.typed("samples")?);
        Ok(())
    }

    pub fn fill_space(&self, s: &mut SpaceArgs) -> Result<(), CliError> {
        if s.norm.is_none() {
            s.norm = self.raw("norm").map(String::from);
        }
        fill(&mut s.dim, self.typed("dim")?);
        if s.box_bounds.is_none() {
            s.box_bounds = self.raw("box").map(String::from);
        }
        if s.c.is_none() {
            s.c = self.raw("c").map(String::from);
        }
        if s.sampler.is_none() {
            s.sampler = self.raw("sampler").map(String::from);
        }
        fill(&mut s.samples, self.typed("samples")?);
        fill(&mut s.budget, self.typed("budget")?);
        Ok(())
    }
}

fn fill<T>(slot: &mut Option<T>, value: Option<T>) {
    if slot.is_none() {
        *slot = value;
    }
}

/// Applies file values underneath whatever the flags already set, picking
/// the command from the file when argv named none.
pub fn apply(cli: &mut Cli) -> Result<(), CliError> {
    let Some(path) = cli.config.clone() else {
        return Ok(());
    };
    let config = Config::load(&path)?;
    config.fill_global(cli)?;
    if cli.command.is_none() {
        cli.command = config.command()?;
    }
    match &mut cli.command {
        None => Err(CliError::Config(
            "no command: pass a subcommand or a `command =` line in the config".into(),
        )),
        Some(
            CommandArgs::Check(p)
            | CommandArgs::Midcheck(p)
            | CommandArgs::Modulus(p)
            | CommandArgs::Hh(p)
            | CommandArgs::Product(p)
            | CommandArgs::PairProduct(p)
            | CommandArgs::Lemma2(p),
        ) => config.fill_problem(p),
        Some(
            CommandArgs::NormTest(s)
            | CommandArgs::SqnormCheck(s)
            | CommandArgs::Counterexample(s),
        ) => config.fill_space(s),
    }
}
