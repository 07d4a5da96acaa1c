use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::density::DensitySpec;
use super::manifold::{ManifoldKind, ManifoldSpec};
use super::sampling::PointCloud;
use crate::error::{Error, Result};

pub const CLOUD_MAGIC: &[u8; 4] = b"MSPC";
pub const CLOUD_VERSION: u32 = 1;

/// Writes the binary cloud format: `MSPC`, version, n, d, m, manifold tag,
/// seed, then row-major f64 coordinates. All fields little-endian.
pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    out.write_all(CLOUD_MAGIC)?;
    out.write_all(&CLOUD_VERSION.to_le_bytes())?;
    out.write_all(&(cloud.len() as u64).to_le_bytes())?;
    out.write_all(&(cloud.manifold.d as u32).to_le_bytes())?;
    out.write_all(&(cloud.manifold.m as u32).to_le_bytes())?;
    out.write_all(&cloud.manifold.kind.tag().to_le_bytes())?;
    out.write_all(&cloud.seed.to_le_bytes())?;
    for v in cloud.coords() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary cloud. The format carries no density, so the result is
/// tagged uniform; use [`PointCloud::with_density`] to attach the real one.
pub fn read_cloud<R: Read>(input: R) -> Result<PointCloud> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CLOUD_MAGIC {
        return Err(Error::Format("missing MSPC magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CLOUD_VERSION {
        return Err(Error::Format(format!("unsupported cloud version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    let m = read_u32(&mut r)? as usize;
    let tag = read_u32(&mut r)?;
    let seed = read_u64(&mut r)?;
    let kind = ManifoldKind::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("unknown manifold tag {tag}")))?;
    let manifold = ManifoldSpec::from_kind(kind, m)?;
    if manifold.d != d {
        return Err(Error::Format(format!(
            "ambient dimension {d} inconsistent with manifold (expected {})",
            manifold.d
        )));
    }
    let mut points = vec![0.0; n * d];
    let mut buf = [0u8; 8];
    for v in points.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    let density = DensitySpec::uniform(&manifold);
    PointCloud::from_points(manifold, density, seed, points)
}

/// One point per line, comma-separated, shortest round-trip float formatting.
pub fn write_cloud_csv<W: Write>(cloud: &PointCloud, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for x in cloud.iter() {
        let line: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Convenience for the CLI: parse a CSV written by [`write_cloud_csv`].
pub fn read_cloud_csv(path: &Path, manifold: ManifoldSpec, density: DensitySpec) -> Result<PointCloud> {
    let f = std::fs::File::open(path)?;
    let mut points = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            points.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad coordinate {tok:?}: {e}")))?,
            );
        }
    }
    PointCloud::from_points(manifold, density, 0, points)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
