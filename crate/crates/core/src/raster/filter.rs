use super::Grid;
use crate::error::Result;

/// 3×3 majority filter over the eight neighbors of each cell.
///
/// A cell becomes 1 (or 0) only when strictly more valid neighbors are 1 (or 0);
/// ties keep the center. Nodata neighbors and out-of-grid positions are ignored,
/// nodata cells stay nodata.
pub fn majority_filter(g: &Grid) -> Result<Grid> {
    g.require_binary("majority filter")?;
    let (nc, nr) = (g.ncols as isize, g.nrows as isize);
    let mut out = g.clone();
    for r in 0..nr {
        for c in 0..nc {
            let center = g.get(c as usize, r as usize);
            if g.is_nodata(center) {
                continue;
            }
            let (mut ones, mut zeros) = (0u8, 0u8);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (cc, rr) = (c + dc, r + dr);
                    if cc < 0 || rr < 0 || cc >= nc || rr >= nr {
                        continue;
                    }
                    let v = g.get(cc as usize, rr as usize);
                    if v == 1.0 {
                        ones += 1;
                    } else if v == 0.0 {
                        zeros += 1;
                    }
                }
            }
            let v = match ones.cmp(&zeros) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => center,
            };
            out.set(c as usize, r as usize, v);
        }
    }
    Ok(out)
}
