use clap::Parser;

fn main() {
    let cli = eshrec_cli::Cli::parse();
    match eshrec_cli::run(cli) {
        Ok(report) => {
            print!("{report}");
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
