use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{outage, sinr_at, Fading, Point3, PropagationParams, RadioError, Result};
use crate::cityworld::CityMap;
use crate::par::{map_indexed, Execution};

pub const RADIO_MAP_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# uavtl radio map";

/// Best-serving SINR sampled at cell centres on a horizontal plane.
///
/// Grids are row-major with `x` varying fastest: cell `(ix, iy)` lives at
/// `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioMap {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub dims: (usize, usize),
    pub altitude: f64,
    pub phi_th_db: f64,
    pub sinr_db: Vec<f64>,
    pub outage: Vec<bool>,
}

impl RadioMap {
    /// Assembles a map from SINR values; the outage grid is derived.
    pub fn from_sinr(origin: [f64; 2], cell_size: f64, dims: (usize, usize), altitude: f64, phi_th_db: f64, sinr_db: Vec<f64>) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(RadioError::Domain(format!("cell_size must be > 0, got {cell_size}")));
        }
        if sinr_db.len() != dims.0 * dims.1 {
            return Err(RadioError::Domain(format!("expected {} values, got {}", dims.0 * dims.1, sinr_db.len())));
        }
        let outage = sinr_db.iter().map(|&s| outage(s, phi_th_db)).collect();
        Ok(Self { origin, cell_size, dims, altitude, phi_th_db, sinr_db, outage })
    }

    pub fn nx(&self) -> usize {
        self.dims.0
    }

    pub fn ny(&self) -> usize {
        self.dims.1
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.dims.0 + ix
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + (ix as f64 + 0.5) * self.cell_size, self.origin[1] + (iy as f64 + 0.5) * self.cell_size]
    }

    /// Cell containing `(x, y)`; the upper map edge belongs to the last cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.origin[0]) / self.cell_size;
        let fy = (y - self.origin[1]) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let ix = (fx.floor() as usize).min(self.dims.0.saturating_sub(1));
        let iy = (fy.floor() as usize).min(self.dims.1.saturating_sub(1));
        if fx > self.dims.0 as f64 || fy > self.dims.1 as f64 {
            return None;
        }
        Some((ix, iy))
    }

    pub fn sinr_at_xy(&self, x: f64, y: f64) -> Option<f64> {
        self.cell_of(x, y).map(|(ix, iy)| self.sinr_db[self.index(ix, iy)])
    }

    pub fn outage_at_xy(&self, x: f64, y: f64) -> Option<bool> {
        self.cell_of(x, y).map(|(ix, iy)| self.outage[self.index(ix, iy)])
    }

    pub fn outage_fraction(&self) -> f64 {
        self.outage.iter().filter(|&&o| o).count() as f64 / self.outage.len().max(1) as f64
    }

    /// Nearest-rank percentile of the SINR grid, `q` in `[0, 100]`.
    pub fn sinr_percentile(&self, q: f64) -> f64 {
        let mut v = self.sinr_db.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        if v.is_empty() {
            return f64::NAN;
        }
        let rank = ((q / 100.0) * (v.len() - 1) as f64).round() as usize;
        v[rank.min(v.len() - 1)]
    }

    /// Serialises to the versioned text container.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.sinr_db.len() * 20);
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "format_version = {RADIO_MAP_FORMAT_VERSION}");
        let _ = writeln!(out, "origin = {:?} {:?}", self.origin[0], self.origin[1]);
        let _ = writeln!(out, "cell_size = {:?}", self.cell_size);
        let _ = writeln!(out, "dims = {} {}", self.dims.0, self.dims.1);
        let _ = writeln!(out, "altitude = {:?}", self.altitude);
        let _ = writeln!(out, "phi_th = {:?}", self.phi_th_db);
        let _ = writeln!(out, "sinr_db");
        for row in self.sinr_db.chunks(self.dims.0.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, msg: String| RadioError::Parse { line, msg };
        let (ln, first) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
        if first != MAGIC {
            return Err(perr(ln, format!("bad magic line {first:?}")));
        }

        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (ln, line) = lines.next().ok_or_else(|| perr(0, format!("missing header field {key}")))?;
            let (k, v) = line.split_once('=').ok_or_else(|| perr(ln, format!("expected `{key} = ...`")))?;
            if k.trim() != key {
                return Err(perr(ln, format!("expected field {key}, found {}", k.trim())));
            }
            Ok((ln, v.split_whitespace().map(str::to_string).collect()))
        };
        let num = |ln: usize, s: &str| s.parse::<f64>().map_err(|e| perr(ln, format!("{s:?}: {e}")));
        let count = |ln: usize, s: &str| s.parse::<usize>().map_err(|e| perr(ln, format!("{s:?}: {e}")));

        let (ln, v) = header("format_version")?;
        let version: u32 = v.first().ok_or_else(|| perr(ln, "missing version".into()))?.parse().map_err(|e| perr(ln, format!("{e}")))?;
        if version != RADIO_MAP_FORMAT_VERSION {
            return Err(RadioError::Version { found: version, expected: RADIO_MAP_FORMAT_VERSION });
        }
        let (ln, v) = header("origin")?;
        if v.len() != 2 {
            return Err(perr(ln, "origin needs 2 values".into()));
        }
        let origin = [num(ln, &v[0])?, num(ln, &v[1])?];
        let (ln, v) = header("cell_size")?;
        let cell_size = num(ln, v.first().map(String::as_str).unwrap_or(""))?;
        let (ln, v) = header("dims")?;
        if v.len() != 2 {
            return Err(perr(ln, "dims needs 2 values".into()));
        }
        let dims = (count(ln, &v[0])?, count(ln, &v[1])?);
        let (ln, v) = header("altitude")?;
        let altitude = num(ln, v.first().map(String::as_str).unwrap_or(""))?;
        let (ln, v) = header("phi_th")?;
        let phi_th_db = num(ln, v.first().map(String::as_str).unwrap_or(""))?;

        let (ln, marker) = lines.next().ok_or_else(|| perr(0, "missing sinr_db section".into()))?;
        if marker != "sinr_db" {
            return Err(perr(ln, format!("expected sinr_db marker, found {marker:?}")));
        }
        let mut sinr = Vec::with_capacity(dims.0 * dims.1);
        let mut rows = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line.split_whitespace().map(|s| num(ln, s)).collect::<Result<_>>()?;
            if row.len() != dims.0 {
                return Err(perr(ln, format!("row has {} values, expected {}", row.len(), dims.0)));
            }
            sinr.extend(row);
            rows += 1;
        }
        if rows != dims.1 {
            return Err(perr(0, format!("found {rows} rows, expected {} (truncated file?)", dims.1)));
        }
        Self::from_sinr(origin, cell_size, dims, altitude, phi_th_db, sinr)
    }
}

/// Deterministic radio map of `city` at `altitude`, evaluated cell-parallel.
pub fn build_radio_map(city: &CityMap, p: &PropagationParams, altitude: f64, cell_size: f64) -> Result<RadioMap> {
    build_radio_map_with(city, p, altitude, cell_size, Execution::Parallel)
}

pub fn build_radio_map_with(city: &CityMap, p: &PropagationParams, altitude: f64, cell_size: f64, exec: Execution) -> Result<RadioMap> {
    p.validate()?;
    if !(cell_size > 0.0) {
        return Err(RadioError::Domain(format!("cell_size must be > 0, got {cell_size}")));
    }
    let tallest = city.max_building_height();
    if altitude <= tallest {
        return Err(RadioError::AltitudeBelowBuilding { altitude, building: tallest });
    }
    let cells = |extent: f64| -> Result<usize> {
        let n = (extent / cell_size).round();
        if n < 1.0 || (n * cell_size - extent).abs() > 1e-9 * extent.max(1.0) {
            return Err(RadioError::Domain(format!("cell_size {cell_size} does not divide extent {extent}")));
        }
        Ok(n as usize)
    };
    let dims = (cells(city.extent[0])?, cells(city.extent[1])?);
    let origin = [0.0, 0.0];
    let values = map_indexed(dims.0 * dims.1, exec, |i| {
        let (ix, iy) = (i % dims.0, i / dims.0);
        let uav = Point3::new(origin[0] + (ix as f64 + 0.5) * cell_size, origin[1] + (iy as f64 + 0.5) * cell_size, altitude);
        sinr_at(&uav, city, p, Fading::Deterministic).map(|s| s.sinr_db)
    });
    let sinr = values.into_iter().collect::<Result<Vec<f64>>>()?;
    RadioMap::from_sinr(origin, cell_size, dims, altitude, p.phi_th_db, sinr)
}

pub fn save_radio_map(map: &RadioMap, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, map.to_text())?;
    Ok(())
}

pub fn load_radio_map(path: impl AsRef<Path>) -> Result<RadioMap> {
    RadioMap::from_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomap::BaseStation;

    fn small_map() -> RadioMap {
        let mut city = CityMap::empty(200.0);
        city.base_stations.push(BaseStation::new([50.0, 50.0], 20.0, 40.0, 0.0, 10.0).unwrap());
        city.base_stations.push(BaseStation::new([150.0, 170.0], 20.0, 40.0, 60.0, 10.0).unwrap());
        build_radio_map(&city, &PropagationParams::default(), 90.0, 20.0).unwrap()
    }

    #[test]
    fn text_round_trip_is_bitwise() {
        let map = small_map();
        let back = RadioMap::from_text(&map.to_text()).unwrap();
        assert_eq!(back, map);
        for (a, b) in map.sinr_db.iter().zip(&back.sinr_db) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn infinite_values_survive() {
        let map = RadioMap::from_sinr([0.0, 0.0], 10.0, (2, 1), 90.0, 0.0, vec![f64::NEG_INFINITY, 3.5]).unwrap();
        let back = RadioMap::from_text(&map.to_text()).unwrap();
        assert_eq!(back.sinr_db[0], f64::NEG_INFINITY);
        assert_eq!(back.outage, vec![true, false]);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let text = small_map().to_text();
        let cut = &text[..text.len() * 2 / 3];
        let cut = &cut[..cut.rfind('\n').unwrap()];
        assert!(matches!(RadioMap::from_text(cut), Err(RadioError::Parse { .. })));
        assert!(matches!(RadioMap::from_text(""), Err(RadioError::Parse { .. })));
    }

    #[test]
    fn version_mismatch() {
        let text = small_map().to_text().replace("format_version = 1", "format_version = 9");
        assert!(matches!(RadioMap::from_text(&text), Err(RadioError::Version { found: 9, .. })));
    }

    #[test]
    fn cell_lookup() {
        let map = small_map();
        assert_eq!(map.dims, (10, 10));
        assert_eq!(map.cell_of(0.0, 0.0), Some((0, 0)));
        assert_eq!(map.cell_of(19.999, 20.0), Some((0, 1)));
        assert_eq!(map.cell_of(200.0, 200.0), Some((9, 9)));
        assert_eq!(map.cell_of(-0.1, 5.0), None);
        assert_eq!(map.cell_of(5.0, 200.1), None);
        assert_eq!(map.cell_center(3, 4), [70.0, 90.0]);
    }

    #[test]
    fn rejects_bad_grid() {
        let city = CityMap::empty(200.0);
        let p = PropagationParams::default();
        assert!(build_radio_map(&city, &p, 90.0, 30.0).is_err());
        assert!(build_radio_map(&city, &p, 90.0, 0.0).is_err());
        let mut tall = CityMap::empty(200.0);
        tall.buildings.push(crate::radiomap::Building::new([10.0, 10.0], [20.0, 20.0], 95.0).unwrap());
        assert!(matches!(build_radio_map(&tall, &p, 90.0, 20.0), Err(RadioError::AltitudeBelowBuilding { .. })));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut city = CityMap::empty(200.0);
        city.base_stations.push(BaseStation::new([50.0, 50.0], 20.0, 40.0, 0.0, 10.0).unwrap());
        let p = PropagationParams::default();
        let a = build_radio_map_with(&city, &p, 90.0, 10.0, Execution::Sequential).unwrap();
        let b = build_radio_map_with(&city, &p, 90.0, 10.0, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
