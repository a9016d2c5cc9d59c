use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// `# key=value` lines written ahead of every table.
#[derive(Debug, Default, Clone)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Header::default();
        h.push("tool", format!("optomech {}", env!("CARGO_PKG_VERSION")));
        h.push("command", command);
        h
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push(format!("# {key}={}", value.into()));
    }

    pub fn extend(&mut self, prefix: &str, pairs: Vec<(String, String)>) {
        for (k, v) in pairs {
            self.push(&format!("{prefix}{k}"), v);
        }
    }

    pub fn note(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }
}

pub fn write_table(
    out: Option<&Path>,
    header: &Header,
    columns: &str,
    rows: &[String],
) -> io::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for line in &header.lines {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "{columns}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()
}

pub fn write_raw(out: Option<&Path>, header: &Header, body: &str) -> io::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for line in &header.lines {
        writeln!(w, "{line}")?;
    }
    w.write_all(body.as_bytes())?;
    w.flush()
}

/// The invocation with `--out` and `--threads` removed, so the header does
/// not depend on where the output goes or how many threads produced it.
pub fn normalized_command(args: &[String]) -> String {
    let mut out = vec!["optomech".to_string()];
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--out" || a == "--threads" {
            i += 2;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--threads=") {
            i += 1;
            continue;
        }
        out.push(quote(a));
        i += 1;
    }
    out.join(" ")
}

fn quote(s: &str) -> String {
    if !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./:=*+,".contains(c))
    {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "'\\''"))
    }
}
