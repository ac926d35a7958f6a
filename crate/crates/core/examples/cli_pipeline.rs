//! The command-line pipeline driven in-process: simulate, generate a small
//! dataset, train, and run a surrogate sensitivity sweep, all under `cli_out/`.

use axlesim::cli::run;

fn main() {
    std::fs::create_dir_all("cli_out").expect("create output directory");
    let steps: [&[&str]; 5] = [
        &[
            "simulate",
            "--out",
            "cli_out/response.csv",
            "--metrics",
            "cli_out/metrics.txt",
        ],
        &[
            "gen-dataset",
            "--samples",
            "300",
            "--out",
            "cli_out/data.csv",
            "--report",
            "cli_out/report.txt",
        ],
        &[
            "train",
            "--dataset",
            "cli_out/data.csv",
            "--epochs",
            "20",
            "--out",
            "cli_out/mtl.ckpt",
            "--trace",
            "cli_out/trace.csv",
        ],
        &[
            "sensitivity",
            "--checkpoint",
            "cli_out/mtl.ckpt",
            "--out",
            "cli_out/sens.csv",
            "--image",
            "cli_out/sens.png",
        ],
        &[
            "plot",
            "trace",
            "--trace",
            "cli_out/trace.csv",
            "--out",
            "cli_out/trace.png",
        ],
    ];
    for args in steps {
        println!("$ axlesim {}", args.join(" "));
        let code = run(std::iter::once("axlesim").chain(args.iter().copied()));
        if code != 0 {
            std::process::exit(code);
        }
    }
}
