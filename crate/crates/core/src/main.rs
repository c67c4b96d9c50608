use std::fs::File;
use std::io::{self, BufReader};
use std::process::ExitCode;

use tardi::debugger::Session;
use tardi::frontend::cli::{load_program, parse_cli, CliCommand, LaunchConfig, ServeSpec};
use tardi::frontend::{repl, server};
use tardi::vm::{init_machine, Status};

const EXIT_USAGE: u8 = 1;
const EXIT_FAULT: u8 = 2;

fn run(launch: &LaunchConfig) -> anyhow::Result<i32> {
    let program = match launch.program() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_USAGE.into());
        }
    };
    let mut machine = init_machine(program, launch.world()?, launch.tabling());
    let code = match machine.run_to_end().clone() {
        Status::Exited(code) => code,
        Status::Error(e) => {
            eprintln!("tardi: {e}");
            EXIT_FAULT.into()
        }
        _ => 0,
    };
    if let Some(scripted) = machine.world().scripted_backend() {
        print!("{}", scripted.stdout());
    }
    Ok(code)
}

fn debug(
    launch: &LaunchConfig,
    serve: Option<&ServeSpec>,
    commands: Option<&std::path::Path>,
) -> anyhow::Result<i32> {
    let program = match launch.program() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_USAGE.into());
        }
    };
    let mut session = Session::new(
        program,
        launch.world()?,
        launch.tabling(),
        launch.program.display().to_string(),
    );
    let code = match (serve, commands) {
        (Some(ServeSpec::Stdio), _) => server::serve_stdio(&mut session)?,
        (Some(ServeSpec::Tcp(port)), _) => server::serve_tcp(&mut session, *port)?,
        (None, Some(path)) => {
            let input = BufReader::new(File::open(path)?);
            repl::repl(&mut session, input, io::stdout().lock())?
        }
        (None, None) => repl::repl(&mut session, io::stdin().lock(), io::stdout().lock())?,
    };
    if let Some(scripted) = session.world().scripted_backend() {
        if !scripted.stdout().is_empty() {
            eprintln!("--- program output ---\n{}", scripted.stdout());
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        CliCommand::Check { program } => match load_program(program) {
            Ok(_) => Ok(0),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
        },
        CliCommand::Run { launch } => run(launch),
        CliCommand::Debug {
            launch,
            serve,
            commands,
        } => debug(launch, serve.as_ref(), commands.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tardi: {e:#}");
            ExitCode::from(EXIT_FAULT)
        }
    }
}
