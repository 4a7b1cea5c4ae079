//! Resource-limited execution of a single child process.
//!
//! Limits are enforced on Linux with a mix of rlimits and a supervising
//! loop in the calling thread:
//!
//! * CPU time is sampled from `/proc/<pid>/stat` and the child is killed as
//!   soon as it reaches the time limit. `RLIMIT_CPU` is a coarse backstop.
//! * Wall time is capped at `time_limit * wall_multiplier`.
//! * Resident memory is sampled from `/proc/<pid>/status` and the child is
//!   killed once it reaches the memory limit. `RLIMIT_AS` is set well above
//!   the limit as a host-safety backstop.
//! * Stdout goes straight to a file capped with `RLIMIT_FSIZE`.
//!
//! The child is traced (`PTRACE_TRACEME`) only to observe its exit event,
//! which is the one moment its high-water RSS can be read exactly.
//! `ru_maxrss` from `wait4` is not used for memory: it includes the RSS of
//! the forking parent.
//!
//! Measurement slack is [`CPU_SLACK_MS`] and [`MEMORY_SLACK_MIB`].

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Limits;

/// CPU-time measurement slack, in milliseconds.
pub const CPU_SLACK_MS: u64 = 50;
/// Peak-memory measurement slack, in mebibytes.
pub const MEMORY_SLACK_MIB: u64 = 2;
/// Default ratio between the wall-clock backstop and the CPU time limit.
pub const DEFAULT_WALL_MULTIPLIER: f64 = 3.0;

const STDERR_EXCERPT_BYTES: usize = 4096;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("failed to spawn `{program}`: {reason}")]
    SpawnFailure { program: String, reason: String },
    #[error("sandbox unavailable: {0}")]
    SandboxUnavailable(String),
    #[error("sandbox i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ExecSpec {
    pub command: Vec<OsString>,
    /// File fed to the child's stdin; empty stdin when `None`.
    pub stdin: Option<PathBuf>,
    /// Root under which a fresh `{run_id}/` scratch directory is created.
    /// The child runs with that scratch directory as its cwd.
    pub working_dir: PathBuf,
    pub limits: Limits,
    pub wall_multiplier: f64,
    /// Run the child in a fresh network namespace.
    pub deny_network: bool,
}

impl ExecSpec {
    pub fn new<I, S>(command: I, working_dir: impl Into<PathBuf>, limits: Limits) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<OsString>,
    {
        ExecSpec {
            command: command.into_iter().map(Into::into).collect(),
            stdin: None,
            working_dir: working_dir.into(),
            limits,
            wall_multiplier: DEFAULT_WALL_MULTIPLIER,
            deny_network: true,
        }
    }

    pub fn stdin(mut self, path: impl Into<PathBuf>) -> Self {
        self.stdin = Some(path.into());
        self
    }

    pub fn wall_limit(&self) -> Duration {
        Duration::from_millis((self.limits.time_limit_ms() as f64 * self.wall_multiplier).ceil() as u64)
    }
}

/// Why the supervisor killed the child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KillCause {
    CpuTime,
    WallTime,
    Memory,
    /// Terminated by a signal the supervisor did not send.
    Signal(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Exited(i32),
    Killed(KillCause),
}

impl ExitStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, ExitStatus::Exited(0))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFlags {
    pub time_exceeded: bool,
    pub memory_exceeded: bool,
    pub output_truncated: bool,
}

impl RunFlags {
    pub fn any(&self) -> bool {
        self.time_exceeded || self.memory_exceeded || self.output_truncated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub exit_status: ExitStatus,
    pub cpu_ms: u64,
    pub wall_ms: u64,
    pub peak_mem_mib: f64,
    pub stdout_path: PathBuf,
    pub stderr_excerpt: String,
    pub flags: RunFlags,
}

impl RunOutcome {
    /// Exited with status 0 and no limit flags.
    pub fn is_clean(&self) -> bool {
        self.exit_status.is_success() && !self.flags.any()
    }

    pub fn read_stdout(&self) -> std::io::Result<Vec<u8>> {
        fs::read(&self.stdout_path)
    }

    /// Scratch directory of this run.
    pub fn scratch_dir(&self) -> Option<&Path> {
        self.stdout_path.parent()
    }

    /// Removes the scratch directory.
    pub fn cleanup(&self) {
        if let Some(dir) = self.scratch_dir() {
            let _ = fs::remove_dir_all(dir);
        }
    }
}

/// A worker pool over [`run_limited`].
pub struct Sandbox {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Sandbox {
    pub fn new(workers: usize) -> Result<Self, SandboxError> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("sandbox-{i}"))
            .build()
            .map_err(|e| SandboxError::SandboxUnavailable(e.to_string()))?;
        Ok(Sandbox { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn run(&self, spec: &ExecSpec) -> Result<RunOutcome, SandboxError> {
        run_limited(spec)
    }

    /// Maps `f` over `items` on the worker pool, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        self.pool.install(|| items.par_iter().map(&f).collect())
    }
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

fn next_run_id() -> String {
    format!("run-{}-{}", std::process::id(), RUN_COUNTER.fetch_add(1, Ordering::Relaxed))
}

fn resolve_program(program: &OsString) -> Result<PathBuf, SandboxError> {
    let path = Path::new(program);
    let spawn_failure = |reason: &str| SandboxError::SpawnFailure { program: path.display().to_string(), reason: reason.to_string() };
    if path.components().count() > 1 {
        return fs::canonicalize(path).map_err(|e| spawn_failure(&e.to_string()));
    }
    let search = std::env::var_os("PATH").unwrap_or_else(|| "/usr/bin:/bin".into());
    std::env::split_paths(&search)
        .map(|dir| dir.join(path))
        .find(|candidate| candidate.is_file())
        .ok_or_else(|| spawn_failure("not found in PATH"))
}

/// Runs one child under `spec` and reports what it consumed.
#[cfg(target_os = "linux")]
pub fn run_limited(spec: &ExecSpec) -> Result<RunOutcome, SandboxError> {
    linux::run(spec)
}

#[cfg(not(target_os = "linux"))]
pub fn run_limited(_spec: &ExecSpec) -> Result<RunOutcome, SandboxError> {
    Err(SandboxError::SandboxUnavailable("resource limits are only enforced on Linux".into()))
}

fn read_excerpt(path: &Path) -> String {
    let mut buf = Vec::new();
    if let Ok(f) = File::open(path) {
        let _ = f.take(STDERR_EXCERPT_BYTES as u64).read_to_end(&mut buf);
    }
    String::from_utf8_lossy(&buf).into_owned()
}

#[cfg(target_os = "linux")]
mod linux {
    use super::*;
    use std::os::unix::process::CommandExt;
    use std::process::Command;

    const MIB: u64 = 1024 * 1024;

    struct Sample {
        cpu_ms: u64,
        rss_kib: u64,
        hwm_kib: u64,
    }

    fn clock_ticks() -> u64 {
        // SAFETY: sysconf has no memory-safety preconditions.
        let t = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
        if t > 0 {
            t as u64
        } else {
            100
        }
    }

    fn sample(pid: i32, ticks: u64) -> Option<Sample> {
        let stat = fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
        let rest = &stat[stat.rfind(')')? + 2..];
        let fields: Vec<&str> = rest.split_whitespace().collect();
        // fields[0] is the state (field 3); utime and stime are fields 14/15
        let utime: u64 = fields.get(11)?.parse().ok()?;
        let stime: u64 = fields.get(12)?.parse().ok()?;
        let status = fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
        let field = |name: &str| {
            status
                .lines()
                .find_map(|l| l.strip_prefix(name))
                .and_then(|v| v.split_whitespace().next())
                .and_then(|v| v.parse::<u64>().ok())
                .unwrap_or(0)
        };
        Some(Sample { cpu_ms: (utime + stime) * 1000 / ticks, rss_kib: field("VmRSS:"), hwm_kib: field("VmHWM:") })
    }

    fn kill_group(pid: i32) {
        // SAFETY: plain syscalls; the child has not been reaped yet, so its
        // pid and process group cannot have been reused.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
            libc::kill(pid, libc::SIGKILL);
        }
    }

    fn set_limit(resource: libc::__rlimit_resource_t, soft: u64, hard: u64) -> std::io::Result<()> {
        let lim = libc::rlimit { rlim_cur: soft as libc::rlim_t, rlim_max: hard as libc::rlim_t };
        // SAFETY: setrlimit only reads the struct we pass.
        if unsafe { libc::setrlimit(resource, &lim) } != 0 {
            return Err(std::io::Error::last_os_error());
        }
        Ok(())
    }

    pub(super) fn run(spec: &ExecSpec) -> Result<RunOutcome, SandboxError> {
        let program =
            spec.command.first().ok_or_else(|| SandboxError::SpawnFailure { program: String::new(), reason: "empty command".into() })?;
        let program = resolve_program(program)?;
        if !spec.working_dir.is_dir() {
            return Err(SandboxError::SpawnFailure {
                program: program.display().to_string(),
                reason: format!("working dir {} does not exist", spec.working_dir.display()),
            });
        }

        let run_dir = spec.working_dir.join(next_run_id());
        fs::create_dir_all(&run_dir)?;
        let stdin_path = run_dir.join("stdin");
        match &spec.stdin {
            Some(src) => {
                fs::copy(src, &stdin_path)?;
            }
            None => {
                File::create(&stdin_path)?;
            }
        }
        let stdout_path = run_dir.join("stdout");
        let stderr_path = run_dir.join("stderr");

        let limits = spec.limits;
        let mem_limit_kib = limits.memory_limit_mib() * 1024;
        let cpu_backstop_s = limits.time_limit_ms().div_ceil(1000) + 1;
        let as_backstop = (limits.memory_limit_mib() * 2 + 128) * MIB;
        let stack = limits.memory_limit_mib() * MIB;
        let fsize = limits.output_limit_bytes();
        let deny_network = spec.deny_network;

        let mut cmd = Command::new(&program);
        cmd.args(&spec.command[1..])
            .current_dir(&run_dir)
            .env_clear()
            .env("PATH", "/usr/local/bin:/usr/bin:/bin")
            .stdin(File::open(&stdin_path)?)
            .stdout(File::create(&stdout_path)?)
            .stderr(File::create(&stderr_path)?);

        // SAFETY: the closure only performs async-signal-safe syscalls.
        unsafe {
            cmd.pre_exec(move || {
                if libc::setpgid(0, 0) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                if deny_network && libc::unshare(libc::CLONE_NEWNET) != 0 && libc::unshare(libc::CLONE_NEWUSER | libc::CLONE_NEWNET) != 0 {
                    return Err(std::io::Error::from_raw_os_error(libc::EPERM));
                }
                set_limit(libc::RLIMIT_CPU, cpu_backstop_s, cpu_backstop_s + 1)?;
                set_limit(libc::RLIMIT_AS, as_backstop, as_backstop)?;
                set_limit(libc::RLIMIT_STACK, stack, stack)?;
                set_limit(libc::RLIMIT_FSIZE, fsize, fsize)?;
                set_limit(libc::RLIMIT_CORE, 0, 0)?;
                if libc::ptrace(libc::PTRACE_TRACEME, 0, 0, 0) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }

        let started = Instant::now();
        let child = cmd.spawn().map_err(|e| {
            if e.raw_os_error() == Some(libc::EPERM) && deny_network {
                SandboxError::SandboxUnavailable(format!("cannot create a network namespace for `{}`", program.display()))
            } else {
                SandboxError::SpawnFailure { program: program.display().to_string(), reason: e.to_string() }
            }
        })?;
        let pid = child.id() as i32;
        // The child is reaped below with wait4; the std handle is not used.
        drop(child);

        let ticks = clock_ticks();
        let wall_limit = spec.wall_limit();
        let mut peak_kib = 0u64;
        let mut cause: Option<KillCause> = None;
        let mut status: libc::c_int = 0;
        // SAFETY: rusage is plain old data.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        let mut options_set = false;

        loop {
            // SAFETY: valid out-pointers for status and usage.
            let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG | libc::__WALL, &mut usage) };
            if r == pid {
                if libc::WIFSTOPPED(status) {
                    let sig = libc::WSTOPSIG(status);
                    let event = (status >> 16) & 0xff;
                    let mut forward = 0;
                    if !options_set && sig == libc::SIGTRAP {
                        options_set = true;
                        // SAFETY: pid is our stopped tracee.
                        unsafe {
                            libc::ptrace(
                                libc::PTRACE_SETOPTIONS,
                                pid,
                                0,
                                (libc::PTRACE_O_TRACEEXIT | libc::PTRACE_O_EXITKILL) as libc::c_long,
                            );
                        }
                    } else if event == libc::PTRACE_EVENT_EXIT {
                        if let Some(s) = sample(pid, ticks) {
                            peak_kib = peak_kib.max(s.hwm_kib).max(s.rss_kib);
                        }
                    } else if sig != libc::SIGTRAP {
                        forward = sig;
                    }
                    // SAFETY: pid is our stopped tracee.
                    unsafe {
                        libc::ptrace(libc::PTRACE_CONT, pid, 0, forward as libc::c_long);
                    }
                    continue;
                }
                break;
            }
            if r < 0 {
                let err = std::io::Error::last_os_error();
                if err.kind() == std::io::ErrorKind::Interrupted {
                    continue;
                }
                kill_group(pid);
                return Err(SandboxError::Io(err));
            }

            if cause.is_none() {
                if let Some(s) = sample(pid, ticks) {
                    peak_kib = peak_kib.max(s.hwm_kib).max(s.rss_kib);
                    if s.cpu_ms >= limits.time_limit_ms() {
                        cause = Some(KillCause::CpuTime);
                    } else if peak_kib >= mem_limit_kib {
                        cause = Some(KillCause::Memory);
                    }
                }
                if cause.is_none() && started.elapsed() >= wall_limit {
                    cause = Some(KillCause::WallTime);
                }
                if cause.is_some() {
                    kill_group(pid);
                }
            }
            let pause = if started.elapsed() < Duration::from_millis(50) { 1 } else { 4 };
            std::thread::sleep(Duration::from_millis(pause));
        }
        let wall_ms = started.elapsed().as_millis() as u64;

        // Reap anything left in the child's process group.
        kill_group(pid);

        let tv_ms = |tv: libc::timeval| tv.tv_sec as u64 * 1000 + tv.tv_usec as u64 / 1000;
        let cpu_ms = tv_ms(usage.ru_utime) + tv_ms(usage.ru_stime);

        let signal = libc::WIFSIGNALED(status).then(|| libc::WTERMSIG(status));
        let exit_status = match (cause, signal) {
            (Some(c), _) => ExitStatus::Killed(c),
            (None, Some(libc::SIGXCPU)) => ExitStatus::Killed(KillCause::CpuTime),
            (None, Some(sig)) => ExitStatus::Killed(KillCause::Signal(sig)),
            (None, None) => ExitStatus::Exited(libc::WEXITSTATUS(status)),
        };

        let stdout_len = fs::metadata(&stdout_path).map(|m| m.len()).unwrap_or(0);
        let flags = RunFlags {
            time_exceeded: matches!(exit_status, ExitStatus::Killed(KillCause::CpuTime) | ExitStatus::Killed(KillCause::WallTime))
                || cpu_ms >= limits.time_limit_ms(),
            memory_exceeded: cause == Some(KillCause::Memory) || peak_kib >= mem_limit_kib,
            output_truncated: signal == Some(libc::SIGXFSZ) || stdout_len >= limits.output_limit_bytes(),
        };

        Ok(RunOutcome {
            exit_status,
            cpu_ms,
            wall_ms,
            peak_mem_mib: peak_kib as f64 / 1024.0,
            stdout_path,
            stderr_excerpt: read_excerpt(&stderr_path),
            flags,
        })
    }
}

#[cfg(all(test, target_os = "linux"))]
mod tests {
    use super::*;

    fn limits(tl: u64, mem: u64, out: u64) -> Limits {
        Limits::new(tl, mem, out).unwrap()
    }

    fn sh(script: &str, dir: &Path, l: Limits) -> ExecSpec {
        ExecSpec::new(["/bin/sh", "-c", script], dir, l)
    }

    #[test]
    fn happy_path_captures_stdout() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_limited(&sh("echo ok", dir.path(), limits(1000, 64, 1024))).unwrap();
        assert_eq!(out.exit_status, ExitStatus::Exited(0));
        assert!(!out.flags.any());
        assert_eq!(out.read_stdout().unwrap(), b"ok\n");
        assert!(out.cpu_ms <= out.wall_ms + CPU_SLACK_MS);
        let run_dir = out.scratch_dir().unwrap();
        assert!(run_dir.join("stdin").exists());
        assert!(run_dir.join("stderr").exists());
    }

    #[test]
    fn stdin_is_fed_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "2 3\n").unwrap();
        let out = run_limited(&sh("cat", dir.path(), limits(1000, 64, 1024)).stdin(&input)).unwrap();
        assert_eq!(out.read_stdout().unwrap(), b"2 3\n");
    }

    #[test]
    fn busy_loop_is_killed() {
        let dir = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let spec = sh("while :; do :; done", dir.path(), limits(200, 64, 1024));
        let out = run_limited(&spec).unwrap();
        assert!(out.flags.time_exceeded);
        assert!(matches!(out.exit_status, ExitStatus::Killed(_)));
        assert!(start.elapsed() <= spec.wall_limit() + Duration::from_millis(500));
        assert!(out.cpu_ms + CPU_SLACK_MS >= 200 || out.wall_ms >= spec.wall_limit().as_millis() as u64);
    }

    #[test]
    fn sleeper_hits_wall_limit() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_limited(&sh("sleep 5", dir.path(), limits(100, 64, 1024))).unwrap();
        assert_eq!(out.exit_status, ExitStatus::Killed(KillCause::WallTime));
        assert!(out.flags.time_exceeded);
        assert!(out.wall_ms < 1000);
    }

    #[test]
    fn output_is_truncated_at_limit() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_limited(&sh("yes", dir.path(), limits(2000, 64, 1000))).unwrap();
        assert!(out.flags.output_truncated);
        assert!(fs::metadata(&out.stdout_path).unwrap().len() <= 1000);
    }

    #[test]
    fn nonzero_exit_and_stderr_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_limited(&sh("echo bad >&2; exit 3", dir.path(), limits(1000, 64, 1024))).unwrap();
        assert_eq!(out.exit_status, ExitStatus::Exited(3));
        assert_eq!(out.stderr_excerpt, "bad\n");
        assert!(!out.is_clean());
    }

    #[test]
    fn signals_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_limited(&sh("kill -SEGV $$", dir.path(), limits(1000, 64, 1024))).unwrap();
        assert_eq!(out.exit_status, ExitStatus::Killed(KillCause::Signal(libc::SIGSEGV)));
    }

    #[test]
    fn missing_binary_is_a_spawn_failure() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExecSpec::new(["/nonexistent/prog"], dir.path(), limits(1000, 64, 1024));
        assert!(matches!(run_limited(&spec), Err(SandboxError::SpawnFailure { .. })));
        let spec = ExecSpec::new(["no-such-program-xyz"], dir.path(), limits(1000, 64, 1024));
        assert!(matches!(run_limited(&spec), Err(SandboxError::SpawnFailure { .. })));
    }

    #[test]
    fn pool_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let sandbox = Sandbox::new(3).unwrap();
        let items: Vec<u32> = (0..6).collect();
        let outs = sandbox.map(&items, |i| {
            let spec = sh(&format!("echo {i}"), dir.path(), limits(1000, 64, 64));
            sandbox.run(&spec).unwrap().read_stdout().unwrap()
        });
        for (i, out) in outs.iter().enumerate() {
            assert_eq!(out, format!("{i}\n").as_bytes());
        }
    }
}
