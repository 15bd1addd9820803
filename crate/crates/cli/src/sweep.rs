//! Cartesian parameter sweeps over any config keys.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, Csv};
use crate::run::{dispatch, generate_reference, Ctx, Summary, COMMANDS};

pub type Axis = (String, Vec<String>);

/// `key=v1,v2; key2=v3` into axes.
pub fn parse_axes(text: &str) -> Result<Vec<Axis>, CliError> {
    let mut axes = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, vs) = part.split_once('=').ok_or_else(|| CliError::config("sweep.axes", format!("{part:?} is not key=v1,v2,...")))?;
        let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(CliError::config("sweep.axes", format!("axis {k} has no values")));
        }
        axes.push((k.trim().to_string(), values));
    }
    Ok(axes)
}

/// Points in row-major order, last axis fastest.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<String>> {
    let mut pts = vec![Vec::new()];
    for (_, values) in axes {
        pts = pts.into_iter().flat_map(|p| values.iter().map(move |v| [p.clone(), vec![v.clone()]].concat())).collect();
    }
    pts
}

/// Keys whose change alters the reference trajectory of a nudge run.
fn moves_reference(key: &str) -> bool {
    ["grid.", "sqg.", "forcing.", "time.", "init."].iter().any(|p| key.starts_with(p))
        || ["seed", "nudge.ref", "nudge.ref_spinup", "nudge.window"].contains(&key)
}

pub fn sweep(ctx: &Ctx, threads: usize) -> Result<Summary, CliError> {
    let c = &ctx.cfg;
    let command = c.raw("sweep.command").to_string();
    if !COMMANDS.contains(&command.as_str()) {
        return Err(CliError::config("sweep.command", format!("{command:?} is not one of {}", COMMANDS.join(", "))));
    }
    let axes = parse_axes(c.raw("sweep.axes"))?;
    let cap: usize = c.get("sweep.cap")?;
    let size = axes.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len())).unwrap_or(usize::MAX);
    if size > cap {
        return Err(CliError::config("sweep.cap", format!("{size} points exceed the cap {cap}")));
    }
    for (k, v) in &axes {
        Config::default().set(k, &v[0])?;
    }
    let mut base = c.clone();
    if command == "nudge" && c.raw("nudge.ref").is_empty() && !axes.iter().any(|(k, _)| moves_reference(k)) {
        let dir = ctx.out.join("ref");
        generate_reference(c, &dir)?;
        base.set("nudge.ref", &dir.display().to_string())?;
    }
    let points = grid_points(&axes);
    let run_point = |(i, values): (usize, &Vec<String>)| -> Result<Summary, CliError> {
        let mut pc = base.clone();
        for ((k, _), v) in axes.iter().zip(values) {
            pc.set(k, v)?;
        }
        pc.set("out_dir", &ctx.out.join("points").join(format!("p{i:05}")).display().to_string())?;
        dispatch(&command, &Ctx::new(pc)?)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Input(e.to_string()))?;
    let results: Vec<Result<Summary, CliError>> = pool.install(|| points.par_iter().enumerate().map(run_point).collect());

    let columns: BTreeSet<String> = results.iter().filter_map(|r| r.as_ref().ok()).flat_map(|s| s.keys().cloned()).collect();
    let mut header = vec!["point".to_string()];
    header.extend(axes.iter().map(|(k, _)| k.clone()));
    header.extend(["status".to_string(), "exit_code".to_string()]);
    header.extend(columns.iter().cloned());
    header.push("error".into());
    let mut csv = Csv::new(&header);
    let mut failed = 0;
    for (i, (values, r)) in points.iter().zip(&results).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(values.iter().cloned());
        match r {
            Ok(s) => {
                row.extend(["ok".to_string(), "0".to_string()]);
                row.extend(columns.iter().map(|k| s.get(k).filter(|v| v.is_finite()).map(|&v| num(v)).unwrap_or_default()));
                row.push(String::new());
            }
            Err(e) => {
                failed += 1;
                row.extend(["failed".to_string(), e.exit_code().to_string()]);
                row.extend(columns.iter().map(|_| String::new()));
                row.push(e.to_string().replace([',', '\n'], ";"));
            }
        }
        csv.text_row(&row);
    }
    csv.write(&ctx.out.join("sweep.csv"))?;
    Ok(Summary::from([("points".into(), points.len() as f64), ("failed".into(), failed as f64)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_and_points() {
        let axes = parse_axes("nudge.mu = 4, 16 ; nudge.m=3,4,5").unwrap();
        assert_eq!(axes.len(), 2);
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec!["4".to_string(), "4".to_string()]);
        assert_eq!(grid_points(&[]), vec![Vec::<String>::new()]);
        assert!(parse_axes("nudge.mu").is_err());
        assert!(parse_axes("nudge.mu=").is_err());
    }

    #[test]
    fn unknown_axis_keys_are_rejected() {
        let c = Config::default();
        assert!(c.clone().set("nudge.nu", "1").is_err());
    }
}
