use std::path::Path;

use rand::seq::SliceRandom;

use super::pgm::{read_pgm, write_pgm};
use super::{render_scene, PatchLabel, RenderConfig};
use crate::env::{generate_crack, CrackKind, Rect};
use crate::error::{Error, Result};
use crate::io::{write_csv, CsvRow};
use crate::rng::{derive_seed, stream, SimRng, TAG_SHUFFLE};
use rand::SeedableRng;

pub const MANIFEST_HEADER: &[&str] = &["filename", "label", "crack_kind", "seed"];
pub const MANIFEST_FILE: &str = "manifest.csv";
/// Side of the deck area a dataset patch shows, matching one grid cell.
const PATCH_M: f64 = 100.0;
/// Cracks keep this far from the patch border so they are fully visible.
const BORDER_M: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub filename: String,
    pub label: PatchLabel,
    pub crack_kind: Option<CrackKind>,
    pub seed: u64,
}

impl CsvRow for ManifestRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.filename.clone(),
            self.label.to_string(),
            self.crack_kind.map(|k| k.name().to_string()).unwrap_or_default(),
            self.seed.to_string(),
        ]
    }
}

/// Writes `n` labeled patches and `manifest.csv` into `dir`.
///
/// `round(n * balance)` patches show a true crack. Of the rest, one third
/// show a false crack and the others bare deck. Patch order is a seeded
/// shuffle; each patch renders from its own derived seed.
pub fn gen_dataset(n: usize, balance: f64, cfg: &RenderConfig, seed: u64, dir: &Path) -> Result<Vec<ManifestRow>> {
    if n < 2 {
        return Err(Error::InvalidArgument("dataset needs at least 2 patches".into()));
    }
    if !(balance > 0.0 && balance < 1.0) {
        return Err(Error::InvalidArgument("balance must be in (0, 1)".into()));
    }
    cfg.validate()?;
    let n_crack = ((n as f64 * balance).round() as usize).clamp(1, n - 1);
    let n_false = (n - n_crack) / 3;
    let mut labels = vec![PatchLabel::Crack; n_crack];
    labels.extend(std::iter::repeat_n(PatchLabel::False, n_false));
    labels.extend(std::iter::repeat_n(PatchLabel::None, n - n_crack - n_false));
    labels.shuffle(&mut stream(seed, &[TAG_SHUFFLE]));

    let rect = Rect { x0: 0.0, y0: 0.0, x1: PATCH_M, y1: PATCH_M };
    let inner = Rect { x0: BORDER_M, y0: BORDER_M, x1: PATCH_M - BORDER_M, y1: PATCH_M - BORDER_M };
    let width = n.to_string().len().max(5);
    let mut rows = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let sample_seed = derive_seed(seed, &[i as u64]);
        let mut rng = SimRng::seed_from_u64(sample_seed);
        let crack = match label {
            PatchLabel::None => None,
            l => Some(generate_crack(None, &mut rng, inner, l == PatchLabel::False)?),
        };
        let cracks: Vec<_> = crack.iter().collect();
        let patch = render_scene(&cracks, &[], rect, PATCH_M, cfg, &mut rng);
        let filename = format!("patch_{i:0width$}.pgm");
        write_pgm(&dir.join(&filename), &patch.image())?;
        rows.push(ManifestRow { filename, label, crack_kind: crack.map(|c| c.kind), seed: sample_seed });
    }
    write_csv(&dir.join(MANIFEST_FILE), MANIFEST_HEADER, &rows)?;
    Ok(rows)
}

/// Patch corpus loaded from a manifest directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub resolution: usize,
    pub images: Vec<Vec<f64>>,
    pub rows: Vec<ManifestRow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Loads `manifest.csv` and its square PGM patches. Works for generated and
/// externally labeled corpora alike; `crack_kind` and `seed` may be blank.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    let mut rdr = csv::Reader::from_path(&path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(Error::Corrupt { path, detail: "unexpected manifest header".into() });
    }
    let mut rows = Vec::new();
    let mut images = Vec::new();
    let mut resolution = None;
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Corrupt { path: path.clone(), detail: format!("bad {what} in `{}`", &rec[0]) };
        let label: PatchLabel = rec[1].parse().map_err(|_| bad("label"))?;
        let crack_kind = match &rec[2] {
            "" => None,
            k => Some(CrackKind::ALL.into_iter().find(|c| c.name() == k).ok_or_else(|| bad("crack_kind"))?),
        };
        let seed = if rec[3].is_empty() { 0 } else { rec[3].parse().map_err(|_| bad("seed"))? };
        let img = read_pgm(&dir.join(&rec[0]))?;
        if img.width != img.height || *resolution.get_or_insert(img.width) != img.width {
            return Err(bad("image size"));
        }
        images.push(img.pixels);
        rows.push(ManifestRow { filename: rec[0].to_string(), label, crack_kind, seed });
    }
    let resolution = resolution.ok_or_else(|| Error::Corrupt { path, detail: "empty manifest".into() })?;
    Ok(Dataset { resolution, images, rows })
}
