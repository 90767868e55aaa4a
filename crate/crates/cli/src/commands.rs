use std::fs;
use std::io::Read;
use std::path::Path;

use bayesopt::acquisition::AcquisitionKind;
use bayesopt::campaign::{
    ask, benchmark_compare, best, case_study_space, initialise, resume_test_function, run_test_function,
    space_from_json, tell, CampaignConfig, CampaignState, Strategy,
};
use bayesopt::optimise::{Bounds, InputSpace};
use bayesopt::testfuncs::{TestFunction, TestFunctionKind};
use serde::Deserialize;

use crate::args::{AcquisitionArg, Cli, Command, FunctionArg, FunctionArgs, SetupArgs, StrategyArg};
use crate::error::{CliError, CliResult};
use crate::lock::CampaignLock;
use crate::table::{points_csv, read_observations};

pub const STATE_FILE: &str = "state.json";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    space: Option<serde_json::Value>,
    campaign: Option<CampaignConfig>,
    seed: Option<u64>,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let dir = cli.campaign.as_deref();
    match cli.command {
        Command::Init(setup) => init(require_dir(dir)?, &setup),
        Command::Ask(out) => {
            let dir = require_dir(dir)?;
            let _lock = CampaignLock::acquire(dir)?;
            let mut state = load(dir)?;
            let x = ask(&mut state)?;
            state.save(&dir.join(STATE_FILE))?;
            emit(out.out.as_deref(), &points_csv(&x))
        }
        Command::Tell { input, force } => {
            let dir = require_dir(dir)?;
            let text = read_input(&input)?;
            let _lock = CampaignLock::acquire(dir)?;
            let mut state = load(dir)?;
            let (x, y) = read_observations(text.as_bytes(), state.dims())?;
            tell(&mut state, &x, &y, force)?;
            state.save(&dir.join(STATE_FILE))?;
            println!(
                "recorded {} observations; {} of {} evaluations used, {} pending",
                y.len(),
                state.num_observations(),
                state.config.budget,
                state.pending.len()
            );
            Ok(())
        }
        Command::Best => {
            print!("{}", approximate_solution(&load(require_dir(dir)?)?)?);
            Ok(())
        }
        Command::Run {
            setup,
            function,
            resume,
            out,
        } => run(dir, &setup, &function, resume, out.as_deref()),
        Command::Bench {
            setup,
            function,
            seeds,
            out,
        } => {
            let f = test_function(&function)?;
            let (space, config, _) = resolve(&setup, Some(&f))?;
            let cmp = benchmark_compare(&space, &config, |s| f.objective(s), seeds)?;
            match out {
                Some(path) => {
                    write(&path, &cmp.traces_csv())?;
                    print!("{}", cmp.summary_csv());
                }
                None => print!("{}", cmp.traces_csv()),
            }
            Ok(())
        }
        Command::Export(out) => emit(out.out.as_deref(), &load(require_dir(dir)?)?.history_csv()),
    }
}

fn init(dir: &Path, setup: &SetupArgs) -> CliResult<()> {
    let (space, config, seed) = resolve(setup, None)?;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let _lock = CampaignLock::acquire(dir)?;
    let path = dir.join(STATE_FILE);
    if path.exists() {
        return Err(CliError::Usage(format!("{} already exists", path.display())));
    }
    let state = initialise(space, config, seed)?;
    state.save(&path)?;
    print!("{}", points_csv(&state.pending_matrix()));
    Ok(())
}

fn run(
    dir: Option<&Path>,
    setup: &SetupArgs,
    function: &FunctionArgs,
    resume: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let f = test_function(function)?;
    let checkpoint = dir.map(|d| d.join(STATE_FILE));
    let _lock = match dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(CliError::io(d))?;
            Some(CampaignLock::acquire(d)?)
        }
        None => None,
    };
    let state = if resume {
        let path = checkpoint
            .as_deref()
            .ok_or_else(|| CliError::Usage("--resume needs a campaign directory".into()))?;
        let mut state = CampaignState::load(path)?;
        resume_test_function(&mut state, &f, Some(path))?;
        state
    } else {
        if let Some(path) = checkpoint.as_deref().filter(|p| p.exists()) {
            return Err(CliError::Usage(format!(
                "{} already exists; pass --resume to continue it",
                path.display()
            )));
        }
        let (space, config, seed) = resolve(setup, Some(&f))?;
        run_test_function(space, config, &f, seed, checkpoint.as_deref())?
    };
    if let Some(path) = out {
        write(path, &state.history_csv())?;
    }
    print!("{}", approximate_solution(&state)?);
    Ok(())
}

/// Incumbent block with 1-based evaluation index.
pub fn approximate_solution(state: &CampaignState) -> CliResult<String> {
    let (x, y, i) = best(state)?;
    let inputs = x.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ");
    Ok(format!(
        "Approximate solution\n--------------------\nEvaluation: {}\nInputs: [{inputs}]\nOutput: {y:.4}\n",
        i + 1
    ))
}

fn require_dir(dir: Option<&Path>) -> CliResult<&Path> {
    dir.ok_or_else(|| CliError::Usage("no campaign directory: pass --campaign or set BAYESOPT_CAMPAIGN_DIR".into()))
}

fn load(dir: &Path) -> CliResult<CampaignState> {
    let path = dir.join(STATE_FILE);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "no campaign at {}; run init first",
            path.display()
        )));
    }
    Ok(CampaignState::load(&path)?)
}

fn read_input(input: &Path) -> CliResult<String> {
    let mut text = String::new();
    if input == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(CliError::io("<stdin>"))?;
    } else {
        text = fs::read_to_string(input).map_err(CliError::io(input))?;
    }
    Ok(text)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn test_function(args: &FunctionArgs) -> CliResult<TestFunction> {
    let kind = match args.function {
        FunctionArg::Ackley => TestFunctionKind::Ackley,
        FunctionArg::Hartmann3 => TestFunctionKind::Hartmann3D,
        FunctionArg::Hartmann6 => TestFunctionKind::Hartmann6D,
    };
    let dims = match (kind, args.dims) {
        (TestFunctionKind::Ackley, None) => Some(2),
        (_, d) => d,
    };
    Ok(TestFunction::new(kind, dims, args.noise_std, false)?)
}

/// Space, configuration and seed from the config file, presets and flags,
/// in increasing order of precedence.
fn resolve(setup: &SetupArgs, function: Option<&TestFunction>) -> CliResult<(InputSpace, CampaignConfig, u64)> {
    let file: ConfigFile = match &setup.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let mut space = if !setup.bounds.is_empty() {
        InputSpace::new(parse_bounds(&setup.bounds)?)
    } else if let Some(value) = file.space {
        space_from_json(value)?
    } else if setup.case_study {
        case_study_space()
    } else if let Some(f) = function {
        InputSpace::new(f.bounds())
    } else {
        return Err(CliError::Usage(
            "no input space: pass --bounds, --case-study or a config file with a space".into(),
        ));
    };
    for spec in &setup.discrete {
        let (dim, values) = parse_discrete(spec)?;
        space = space.with_discrete(dim, values)?;
    }
    if let Some(f) = function {
        if f.dims() != space.dims() {
            return Err(CliError::Usage(format!(
                "space has {} dimensions but the function takes {}",
                space.dims(),
                f.dims()
            )));
        }
    }

    let mut config = match file.campaign {
        Some(c) => c,
        None if setup.case_study => CampaignConfig::case_study(),
        None => match (setup.budget, setup.init_points) {
            (Some(b), Some(n)) => CampaignConfig::new(b, n),
            _ => {
                return Err(CliError::Usage(
                    "pass --budget and --init-points, --case-study or a config file".into(),
                ))
            }
        },
    };
    if let Some(v) = setup.budget {
        config.budget = v;
    }
    if let Some(v) = setup.init_points {
        config.init_points = v;
    }
    if let Some(v) = setup.batch_size {
        config.optimiser.batch_size = v;
    }
    if let Some(v) = setup.strategy {
        config.strategy = match v {
            StrategyArg::Single => Strategy::Single,
            StrategyArg::Joint => Strategy::MultiJoint,
            StrategyArg::Sequential => Strategy::MultiSequential,
        };
    }
    if let Some(v) = setup.acquisition {
        config.acquisition.variant = match v {
            AcquisitionArg::Ei => AcquisitionKind::Ei,
            AcquisitionArg::Ucb => AcquisitionKind::Ucb,
            AcquisitionArg::Mcei => AcquisitionKind::McEi,
            AcquisitionArg::Mcucb => AcquisitionKind::McUcb,
        };
    }
    if let Some(v) = setup.beta {
        config.acquisition.beta = v;
    }
    if let Some(v) = setup.samples {
        config.acquisition.samples = v;
    }
    if setup.fix_base_samples {
        config.acquisition.fix_base_samples = true;
    }
    config.validate()?;
    Ok((space, config, setup.seed.or(file.seed).unwrap_or(0)))
}

fn parse_bounds(specs: &[String]) -> CliResult<Bounds> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for s in specs {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("bound {s:?} is not LO:HI")))?;
        lower.push(parse_number(lo)?);
        upper.push(parse_number(hi)?);
    }
    Ok(Bounds::new(lower, upper)?)
}

fn parse_discrete(spec: &str) -> CliResult<(usize, Vec<f64>)> {
    let (dim, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("discrete spec {spec:?} is not DIM=V1,V2,...")))?;
    let dim = dim
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad dimension index in {spec:?}")))?;
    let values = values.split(',').map(parse_number).collect::<CliResult<Vec<_>>>()?;
    Ok((dim, values))
}

fn parse_number(s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{s:?} is not a number")))
}
