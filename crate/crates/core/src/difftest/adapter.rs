use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wait_timeout::ChildExt;

use super::mock::{mock_synthesize, MockBugProfile};
use super::{DiffError, TestCase};
use crate::hdl::{print, print_files};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    Synthesizer,
    Simulator,
    Mock,
}

/// External tool invocation. `args` may use `{input}` (main source file),
/// `{inputs}` (all source files, one argument each), `{outdir}` and `{top}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolAdapter {
    pub name: String,
    #[serde(default)]
    pub cmd: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    pub kind: AdapterKind,
    /// Netlist written by the tool, relative to `{outdir}`, read back for
    /// co-simulation when it parses as the supported subset.
    #[serde(default)]
    pub netlist: Option<String>,
    /// Injected bugs of a mock adapter.
    #[serde(default)]
    pub profile: MockBugProfile,
}

fn default_timeout() -> u64 {
    60
}

impl ToolAdapter {
    pub fn mock(name: impl Into<String>, profile: MockBugProfile) -> Self {
        Self {
            name: name.into(),
            cmd: "metahunt-mock".into(),
            args: vec!["{input}".into()],
            timeout_s: 1,
            kind: AdapterKind::Mock,
            netlist: Some("netlist.v".into()),
            profile,
        }
    }

    pub fn check(&self) -> Result<(), DiffError> {
        if self.timeout_s < 1 {
            return Err(DiffError::InvalidAdapter(format!(
                "{}: timeout must be at least 1s",
                self.name
            )));
        }
        if self.kind != AdapterKind::Mock && !self.args.iter().any(|a| a.contains("{input")) {
            return Err(DiffError::InvalidAdapter(format!(
                "{}: arguments never mention {{input}}",
                self.name
            )));
        }
        Ok(())
    }
}

pub fn load_adapters(path: &Path) -> Result<Vec<ToolAdapter>, DiffError> {
    let text =
        fs::read_to_string(path).map_err(|e| DiffError::Io(path.display().to_string(), e))?;
    let adapters: Vec<ToolAdapter> =
        serde_json::from_str(&text).map_err(|e| DiffError::InvalidAdapter(e.to_string()))?;
    for a in &adapters {
        a.check()?;
    }
    Ok(adapters)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Success {
        digest: String,
        log: String,
        /// Netlist source, when the adapter produces one.
        netlist: Option<String>,
    },
    Crash {
        /// Exit code, or `None` when killed by a signal.
        status: Option<i32>,
        log: String,
    },
    Timeout,
    ToolMissing,
}

impl RunOutcome {
    pub fn is_crash(&self) -> bool {
        matches!(self, RunOutcome::Crash { .. })
    }

    pub fn log(&self) -> &str {
        match self {
            RunOutcome::Success { log, .. } | RunOutcome::Crash { log, .. } => log,
            _ => "",
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of every regular file under `dir`, in path order.
fn digest_dir(dir: &Path) -> io::Result<String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(
            f.strip_prefix(dir)
                .unwrap_or(&f)
                .to_string_lossy()
                .as_bytes(),
        );
        h.update([0]);
        h.update(fs::read(&f)?);
    }
    Ok(hex::encode(h.finalize()))
}

/// Materializes the case under `scratch/input/` and returns the file paths,
/// main file first.
pub fn write_case(case: &TestCase, scratch: &Path) -> io::Result<Vec<PathBuf>> {
    let input = scratch.join("input");
    fs::create_dir_all(&input)?;
    let mut paths = Vec::new();
    for f in print_files(&case.design) {
        let p = input.join(&f.path);
        fs::write(&p, f.text)?;
        paths.push(p);
    }
    Ok(paths)
}

fn expand(args: &[String], inputs: &[PathBuf], outdir: &Path, top: &str) -> Vec<String> {
    let mut out = Vec::new();
    for a in args {
        if a == "{inputs}" {
            out.extend(inputs.iter().map(|p| p.display().to_string()));
            continue;
        }
        let all = inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push(
            a.replace("{inputs}", &all)
                .replace("{input}", &inputs[0].display().to_string())
                .replace("{outdir}", &outdir.display().to_string())
                .replace("{top}", top),
        );
    }
    out
}

/// Runs one adapter on a case inside the fresh directory `scratch`.
pub fn run_tool(t: &ToolAdapter, case: &TestCase, scratch: &Path) -> Result<RunOutcome, DiffError> {
    let io_err = |e| DiffError::Io(scratch.display().to_string(), e);
    if scratch.exists() {
        fs::remove_dir_all(scratch).map_err(io_err)?;
    }
    let outdir = scratch.join("out");
    fs::create_dir_all(&outdir).map_err(io_err)?;
    let inputs = write_case(case, scratch).map_err(io_err)?;

    if t.kind == AdapterKind::Mock {
        let run = mock_synthesize(&case.design, &t.profile);
        if let (RunOutcome::Success { .. }, Some(netlist)) = (&run.outcome, &run.netlist) {
            let name = t.netlist.as_deref().unwrap_or("netlist.v");
            fs::write(outdir.join(name), print(netlist)).map_err(io_err)?;
        }
        fs::write(scratch.join("log.txt"), run.outcome.log()).map_err(io_err)?;
        return Ok(run.outcome);
    }

    let args = expand(&t.args, &inputs, &outdir, &case.design.top);
    let child = Command::new(&t.cmd)
        .args(&args)
        .current_dir(scratch)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn();
    let mut child = match child {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(RunOutcome::ToolMissing),
        Err(e) => return Err(io_err(e)),
    };
    // Drain pipes on helper threads so a chatty tool cannot block on a full pipe.
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });
    let status = child
        .wait_timeout(Duration::from_secs(t.timeout_s.max(1)))
        .map_err(io_err)?;
    let Some(status) = status else {
        let _ = child.kill();
        let _ = child.wait();
        return Ok(RunOutcome::Timeout);
    };
    let mut log = out_reader.join().unwrap_or_default();
    log.extend(err_reader.join().unwrap_or_default());
    let log = String::from_utf8_lossy(&log).into_owned();
    fs::write(scratch.join("log.txt"), &log).map_err(io_err)?;
    if !status.success() {
        let log = if log.is_empty() {
            format!("exit status {status}")
        } else {
            log
        };
        return Ok(RunOutcome::Crash {
            status: status.code(),
            log,
        });
    }
    let netlist = t
        .netlist
        .as_ref()
        .and_then(|n| fs::read_to_string(outdir.join(n)).ok());
    Ok(RunOutcome::Success {
        digest: digest_dir(&outdir).map_err(io_err)?,
        log,
        netlist,
    })
}
