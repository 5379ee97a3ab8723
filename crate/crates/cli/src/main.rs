use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use belief_core::program::{execute_program, parse_program, render_reports, Format};
use belief_core::scalars::{parse_rational, Mode, Rational};
use belief_core::scenarios::{
    epsilon_order, run_scenario, scenario_info, sweep, verify, ParamValue, Params, Perturbation, Verdict, SCENARIOS,
};
use belief_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "belief", version, about = "Exact evidence combination for uncertain default rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and execute a scenario program
    Run {
        file: PathBuf,
        /// Arithmetic mode; defaults to symbolic when a used parameter is `sym`
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value = "table")]
        format: Format,
        /// Override a parameter, e.g. `--set e1=1/10` (repeatable)
        #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
        set: Vec<(String, Rational)>,
    },
    /// Run a built-in scenario against its closed forms
    Scenario {
        /// Scenario name; `list` prints the available ones
        name: String,
        /// Rule slack e1: a rational literal or `sym`
        #[arg(long)]
        e1: Option<ParamValue>,
        /// Rule slack e2: a rational literal or `sym`
        #[arg(long)]
        e2: Option<ParamValue>,
        #[arg(long)]
        prior: Option<ParamValue>,
        #[arg(long)]
        strength: Option<ParamValue>,
        /// `mass` or `belief` (two_step_tweety)
        #[arg(long)]
        reading: Option<ParamValue>,
        /// Defaults to symbolic unless both e1 and e2 are numbers
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Evaluate one quantity of a scenario along e1 = e2 = eps and fit its order
    Sweep {
        scenario: String,
        /// Quantity key as shown by `scenario`, e.g. `bel{b}`
        #[arg(long)]
        quantity: String,
        /// Comma-separated eps values, e.g. `1e-2,1e-3,1e-4,1e-5`
        #[arg(long, value_delimiter = ',', value_parser = parse_rational_arg, required = true)]
        grid: Vec<Rational>,
        #[arg(long, default_value = "rational")]
        mode: Mode,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// Check every built-in scenario symbolically against its closed forms
    Verify {
        /// Corrupt one expected coefficient first: scenario:quantity:num|den:term[:delta]
        #[arg(long)]
        perturb: Option<Perturbation>,
        /// Print every report in full
        #[arg(long)]
        verbose: bool,
    },
}

fn parse_rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_assignment(s: &str) -> Result<(String, Rational), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    Ok((name.trim().to_string(), parse_rational_arg(value)?))
}

enum Failure {
    Verification,
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            file,
            mode,
            format,
            set,
        } => {
            let source = std::fs::read_to_string(&file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            let program = parse_program(&source).map_err(|e| Failure::Usage(format!("{}:{e}", file.display())))?;
            let overrides: BTreeMap<String, Rational> = set.into_iter().collect();
            let reports = execute_program(&program, mode, &overrides)?;
            print!("{}", render_reports(&reports, format));
            Ok(())
        }
        Command::Scenario {
            name,
            e1,
            e2,
            prior,
            strength,
            reading,
            mode,
            format,
        } => {
            if name == "list" {
                for s in SCENARIOS {
                    println!("{:<22} ({})  {}", s.name, s.params.join(", "), s.about);
                }
                return Ok(());
            }
            let info = scenario_info(&name)?;
            let mut params = Params::new();
            for (key, value) in [
                ("e1", e1),
                ("e2", e2),
                ("prior", prior),
                ("strength", strength),
                ("reading", reading),
            ] {
                let Some(value) = value else { continue };
                if !info.params.contains(&key) {
                    return Err(Failure::Usage(format!(
                        "{name} takes {}, not --{key}",
                        info.params.join(", ")
                    )));
                }
                params.insert(key.to_string(), value);
            }
            let numeric = |k: &str| matches!(params.get(k), Some(ParamValue::Number(_)));
            let mode = mode.unwrap_or(if numeric("e1") && numeric("e2") {
                Mode::Rational
            } else {
                Mode::Symbolic
            });
            let report = run_scenario(&name, &params, mode)?;
            print!("{}", render_reports(std::slice::from_ref(&report), format));
            Ok(())
        }
        Command::Sweep {
            scenario,
            quantity,
            grid,
            mode,
            format,
        } => {
            let values = sweep(&scenario, &quantity, &grid, mode, &Params::new())?;
            let fit = epsilon_order(&scenario, &quantity, &grid, mode);
            match format {
                Format::Table => {
                    let width = values.iter().map(|(e, _)| e.to_string().len()).max().unwrap_or(3).max(3);
                    println!("{scenario} {quantity} along e1 = e2 = eps [{mode}]");
                    println!("  {:<width$}  value", "eps");
                    for (eps, v) in &values {
                        println!("  {:<width$}  {v}", eps.to_string());
                    }
                    match &fit {
                        Ok(f) => println!("  order: {} (slope {:.6})", f.class, f.slope),
                        Err(e) => println!("  order: not fitted ({e})"),
                    }
                }
                Format::Csv => {
                    println!("eps,value");
                    for (eps, v) in &values {
                        println!("{eps},{v}");
                    }
                }
                Format::Json => {
                    let points: Vec<_> = values
                        .iter()
                        .map(|(eps, v)| serde_json::json!({ "eps": eps.to_string(), "value": v.to_string() }))
                        .collect();
                    let order = fit
                        .as_ref()
                        .ok()
                        .map(|f| serde_json::json!({ "slope": f.slope, "class": f.class.to_string() }));
                    let body = serde_json::json!({
                        "scenario": scenario,
                        "quantity": quantity,
                        "mode": mode.name(),
                        "points": points,
                        "order": order,
                    });
                    println!("{}", serde_json::to_string_pretty(&body).expect("json values serialize"));
                }
            }
            Ok(())
        }
        Command::Verify { perturb, verbose } => {
            if let Some(p) = &perturb {
                println!("perturbing {p}");
            }
            let v = verify(perturb.as_ref())?;
            for r in &v.reports {
                let verdict = if r.passed() { Verdict::Pass } else { Verdict::Fail };
                let label = match r.params.iter().find(|(k, _)| k == "reading") {
                    Some((_, reading)) => format!("{} (reading={reading})", r.scenario),
                    None => r.scenario.clone(),
                };
                println!(
                    "{verdict} {label}: {} quantities, {} checks",
                    r.quantities.len(),
                    r.checks.len()
                );
                for q in r.quantities.iter().filter(|q| q.verdict == Some(Verdict::Fail)) {
                    let expected = q.expected.as_ref().map(ToString::to_string).unwrap_or_default();
                    println!("  {}: got {}, expected {expected}", q.name, q.value);
                }
                for c in r.checks.iter().filter(|c| !c.passed) {
                    println!("  check {}: {}", c.name, c.detail);
                }
                if verbose {
                    print!("{}", render_reports(std::slice::from_ref(r), Format::Table));
                }
            }
            for c in &v.checks {
                let verdict = if c.passed { Verdict::Pass } else { Verdict::Fail };
                println!("{verdict} {}: {}", c.name, c.detail);
            }
            if v.passed() {
                println!("verify: PASS");
                Ok(())
            } else {
                println!("verify: FAIL");
                Err(Failure::Verification)
            }
        }
    }
}
