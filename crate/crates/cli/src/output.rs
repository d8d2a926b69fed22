use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use metriclab::Warning;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const LOCK_NAME: &str = ".metriclab.lock";

/// Sentinel marking an output directory as in use. Removed on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(anyhow!(
                "{} is in use by another invocation (remove {} if it is stale)",
                dir.display(),
                path.display()
            )),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Directory that holds a file output.
pub fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes through a closure into a buffered file.
pub fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> metriclab::Result<()>,
{
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

/// Prints warnings to stderr, one JSON object per line.
pub fn emit_warnings(warnings: &[Warning]) {
    let stderr = io::stderr();
    let mut err = stderr.lock();
    for w in warnings {
        if let Ok(line) = serde_json::to_string(w) {
            let _ = writeln!(err, "{line}");
        }
    }
}

fn describe_input(path: &Path) -> Value {
    let mut hasher = Sha256::new();
    let mut bytes = 0u64;
    let ok = File::open(path).and_then(|mut f| {
        let mut buf = [0u8; 1 << 16];
        loop {
            let n = f.read(&mut buf)?;
            if n == 0 {
                return Ok(());
            }
            bytes += n as u64;
            hasher.update(&buf[..n]);
        }
    });
    match ok {
        Ok(()) => json!({
            "path": path.display().to_string(),
            "bytes": bytes,
            "sha256": format!("{:x}", hasher.finalize()),
        }),
        Err(_) => json!({ "path": path.display().to_string() }),
    }
}

/// Record of one invocation, written next to its outputs.
pub struct RunRecord {
    command: &'static str,
    options: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    extra: serde_json::Map<String, Value>,
}

impl RunRecord {
    pub fn new(command: &'static str, options: &impl Serialize) -> Self {
        Self {
            command,
            options: serde_json::to_value(options).unwrap_or(Value::Null),
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, p: impl Into<PathBuf>) {
        self.inputs.push(p.into());
    }

    pub fn inputs(&mut self, ps: impl IntoIterator<Item = PathBuf>) {
        self.inputs.extend(ps);
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.extra
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn write(mut self, path: &Path) -> Result<()> {
        self.inputs.sort();
        self.inputs.dedup();
        let mut doc = json!({
            "tool": "metriclab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "options": self.options,
            "inputs": self.inputs.iter().map(|p| describe_input(p)).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        if let Value::Object(map) = &mut doc {
            map.extend(self.extra);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}

/// Manifest path for a single-file output: `t.csv` → `t.csv.manifest.json`.
pub fn manifest_for(file: &Path) -> PathBuf {
    let mut s = file.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}
