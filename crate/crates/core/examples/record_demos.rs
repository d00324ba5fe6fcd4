//! Records expert demonstrations, writes them, and reads them back.

use ifolab::envs::{EnvKind, EnvSpec};
use ifolab::experts::{make_pairs, read_demos, record_demonstrations, write_demos};

fn main() -> ifolab::Result<()> {
    let kind: EnvKind = std::env::args().nth(1).as_deref().unwrap_or("maze3").parse()?;
    let spec = EnvSpec::new(kind);
    let demos = record_demonstrations(&spec, 10, 7)?;
    let path = std::env::temp_dir().join(format!("ifolab-demos-{kind}.tsv"));
    write_demos(&path, &demos, spec.shape)?;
    let (back, shape) = read_demos(&path)?;
    assert_eq!(back, demos);
    let pairs = make_pairs(&back)?;
    let lengths: Vec<usize> = back.iter().map(|d| d.len()).collect();
    println!("{kind}: {} trajectories of {lengths:?} states, shape {shape:?}", back.len());
    println!("{} expert state pairs; file {}", pairs.len(), path.display());
    Ok(())
}
