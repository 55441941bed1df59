use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use kopt_core::instance::{parse_tsplib, Instance, Tour};

/// Reads a JSON or TSPLIB instance, told apart by the first character.
pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = if text.trim_start().starts_with('{') { Instance::from_json_str(&text) } else { parse_tsplib(&text) };
    inst.with_context(|| format!("parsing {}", path.display()))
}

pub fn read_tour(path: Option<&Path>, inst: &Instance) -> Result<Tour> {
    let tour = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Tour::from_json_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Tour::identity(inst.n())?,
    };
    tour.check_for(inst)?;
    Ok(tour)
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn parse_weights(s: &str) -> Result<Vec<i64>> {
    s.split(',').map(|w| w.trim().parse::<i64>().with_context(|| format!("bad weight `{w}`"))).collect()
}
