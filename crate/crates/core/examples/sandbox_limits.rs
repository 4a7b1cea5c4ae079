//! Runs a few shell one-liners under tight limits and prints what the
//! sandbox observed.
//!
//!     cargo run --example sandbox_limits

use judgeforge::model::Limits;
use judgeforge::sandbox::{ExecSpec, Sandbox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    let sandbox = Sandbox::new(1)?;
    let limits = Limits::new(500, 64, 1024)?;
    let programs = [
        ("hello", "echo hello"),
        ("busy loop", "while :; do :; done"),
        ("chatty", "yes judgeforge"),
        ("crash", "kill -SEGV $$"),
        ("network", "exec 3<>/dev/tcp/1.1.1.1/80 && echo connected"),
    ];
    for (name, script) in programs {
        let spec = ExecSpec::new(["/bin/bash", "-c", script], scratch.path(), limits);
        let out = sandbox.run(&spec)?;
        let stdout = out.read_stdout()?;
        println!(
            "{name:>10}: {:?} cpu={}ms wall={}ms peak={:.1}MiB flags={:?} stdout={}B",
            out.exit_status,
            out.cpu_ms,
            out.wall_ms,
            out.peak_mem_mib,
            out.flags,
            stdout.len()
        );
        out.cleanup();
    }
    Ok(())
}
