//! 8-bit portable graymap output.

use std::io::Write;
use std::path::Path;

use super::EngineError;

/// Gap between montage tiles, pixels.
const MONTAGE_GAP: usize = 2;

/// Binary PGM (`P5`) bytes for a row-major 8-bit image.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(
        pixels.len(),
        width * height,
        "pixel buffer does not match size"
    );
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(
    path: &Path,
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<(), EngineError> {
    let mut f = std::fs::File::create(path).map_err(|e| EngineError::io(path.display(), e))?;
    f.write_all(&encode_pgm(width, height, pixels))
        .map_err(|e| EngineError::io(path.display(), e))
}

/// Contact sheet of equally sized tiles, `columns` per row, separated by
/// black gaps. Returns `(width, height, pixels)`.
pub fn montage(
    tiles: &[Vec<u8>],
    tile_w: usize,
    tile_h: usize,
    columns: usize,
) -> (usize, usize, Vec<u8>) {
    let columns = columns.max(1).min(tiles.len().max(1));
    let rows = tiles.len().div_ceil(columns).max(1);
    let w = columns * tile_w + (columns - 1) * MONTAGE_GAP;
    let h = rows * tile_h + (rows - 1) * MONTAGE_GAP;
    let mut out = vec![0u8; w * h];
    for (i, tile) in tiles.iter().enumerate() {
        let (tr, tc) = (i / columns, i % columns);
        let (x0, y0) = (tc * (tile_w + MONTAGE_GAP), tr * (tile_h + MONTAGE_GAP));
        for r in 0..tile_h {
            let dst = (y0 + r) * w + x0;
            out[dst..dst + tile_w].copy_from_slice(&tile[r * tile_w..(r + 1) * tile_w]);
        }
    }
    (w, h, out)
}
