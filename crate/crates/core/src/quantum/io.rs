//! Raw-session file formats: one CSV row per sifted pair plus a JSON
//! sidecar carrying the calibration metadata.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Basis, RawSession, SessionConfig};
use crate::error::{Error, Result};

/// Sidecar metadata stored next to the session CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub units: usize,
    pub sifted_fraction: f64,
    pub var_alice: f64,
    pub var_bob: f64,
    pub config: SessionConfig,
}

impl SessionMeta {
    pub fn of(session: &RawSession) -> Self {
        Self {
            units: session.len(),
            sifted_fraction: session.sifted_fraction,
            var_alice: session.var_alice,
            var_bob: session.var_bob,
            config: session.config,
        }
    }
}

/// Render a float with 17 significant digits so it parses back to the
/// identical double.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `index,basis,x_alice,x_bob` rows. An optional `comment` is
/// emitted first as a `#`-prefixed line.
pub fn write_session_csv(
    session: &RawSession,
    mut w: impl Write,
    comment: Option<&str>,
) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "index,basis,x_alice,x_bob")?;
    for i in 0..session.len() {
        writeln!(
            w,
            "{},{},{},{}",
            i,
            session.bases[i].as_str(),
            fmt17(session.alice_units[i]),
            fmt17(session.bob_units[i]),
        )?;
    }
    Ok(())
}

/// Read a session back from its CSV and sidecar metadata.
pub fn read_session_csv(r: impl BufRead, meta: &SessionMeta) -> Result<RawSession> {
    let mut alice = Vec::with_capacity(meta.units);
    let mut bob = Vec::with_capacity(meta.units);
    let mut bases = Vec::with_capacity(meta.units);
    let mut saw_header = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "index,basis,x_alice,x_bob" {
                return Err(Error::Format(format!(
                    "line {}: expected session header, got {line:?}",
                    lineno + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| {
                Error::Format(format!("line {}: missing field {name}", lineno + 1))
            })
        };
        let _index = next("index")?;
        let basis: Basis = next("basis")?.parse()?;
        let xa: f64 = next("x_alice")?
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        let xb: f64 = next("x_bob")?
            .parse()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        alice.push(xa);
        bob.push(xb);
        bases.push(basis);
    }
    if alice.len() != meta.units {
        return Err(Error::Format(format!(
            "session has {} rows, sidecar says {}",
            alice.len(),
            meta.units
        )));
    }
    Ok(RawSession {
        alice_units: alice,
        bob_units: bob,
        bases,
        sifted_fraction: meta.sifted_fraction,
        var_alice: meta.var_alice,
        var_bob: meta.var_bob,
        config: meta.config,
    })
}
