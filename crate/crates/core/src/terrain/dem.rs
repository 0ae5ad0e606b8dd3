use std::path::Path;

use nalgebra::Point2;

use super::TerrainError;

/// ESRI ASCII elevation raster. Row 0 is the northern row.
#[derive(Debug, Clone)]
pub struct DemGrid {
    pub ncols: usize,
    pub nrows: usize,
    /// Lower-left corner of the lower-left cell.
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: Option<f64>,
    values: Vec<f64>,
}

impl DemGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: Option<f64>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(values.len(), ncols * nrows);
        Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TerrainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TerrainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, name: &str) -> Result<Self, TerrainError> {
        let err = |line: usize, message: String| TerrainError::Parse {
            source_name: name.to_string(),
            line,
            message,
        };
        let mut ncols = None;
        let mut nrows = None;
        let mut x = None;
        let mut y = None;
        let mut centered = (false, false);
        let mut cellsize = None;
        let mut nodata = None;
        let mut values = Vec::new();
        let mut in_header = true;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            let first = l.split_whitespace().next().unwrap();
            if in_header
                && first
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic())
            {
                let mut it = l.split_whitespace();
                let key = it.next().unwrap().to_ascii_lowercase();
                let val = it
                    .next()
                    .ok_or_else(|| err(line, format!("header `{key}` has no value")))?;
                let num: f64 = val.parse().map_err(|_| {
                    err(
                        line,
                        format!("header `{key}` value `{val}` is not a number"),
                    )
                })?;
                match key.as_str() {
                    "ncols" => ncols = Some(num as usize),
                    "nrows" => nrows = Some(num as usize),
                    "xllcorner" => x = Some(num),
                    "yllcorner" => y = Some(num),
                    "xllcenter" => {
                        x = Some(num);
                        centered.0 = true;
                    }
                    "yllcenter" => {
                        y = Some(num);
                        centered.1 = true;
                    }
                    "cellsize" => cellsize = Some(num),
                    "nodata_value" => nodata = Some(num),
                    _ => return Err(err(line, format!("unknown header key `{key}`"))),
                }
                continue;
            }
            in_header = false;
            for tok in l.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| err(line, format!("value `{tok}` is not a number")))?;
                values.push(v);
            }
        }
        let missing = |k: &str| err(last_line, format!("missing header `{k}`"));
        let ncols = ncols.ok_or_else(|| missing("ncols"))?;
        let nrows = nrows.ok_or_else(|| missing("nrows"))?;
        let cellsize = cellsize.ok_or_else(|| missing("cellsize"))?;
        let mut xll = x.ok_or_else(|| missing("xllcorner"))?;
        let mut yll = y.ok_or_else(|| missing("yllcorner"))?;
        if ncols == 0 || nrows == 0 || cellsize <= 0.0 {
            return Err(err(
                last_line,
                "raster dimensions and cellsize must be positive".into(),
            ));
        }
        if centered.0 {
            xll -= 0.5 * cellsize;
        }
        if centered.1 {
            yll -= 0.5 * cellsize;
        }
        if values.len() != ncols * nrows {
            return Err(err(
                last_line,
                format!("expected {} values, found {}", ncols * nrows, values.len()),
            ));
        }
        Ok(Self::new(ncols, nrows, xll, yll, cellsize, nodata, values))
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[row * self.ncols + col];
        match self.nodata {
            Some(nd) if v == nd => None,
            _ => Some(v),
        }
    }

    /// Bilinear interpolation between cell centres; constant extension in
    /// the half cell along the raster edge. `None` outside the raster or
    /// when a contributing cell is NODATA.
    pub fn sample(&self, p: Point2<f64>) -> Option<f64> {
        let w = self.ncols as f64 * self.cellsize;
        let h = self.nrows as f64 * self.cellsize;
        if !(p.x >= self.xll && p.x <= self.xll + w && p.y >= self.yll && p.y <= self.yll + h) {
            return None;
        }
        let fx = ((p.x - self.xll) / self.cellsize - 0.5).clamp(0.0, (self.ncols - 1) as f64);
        // rows counted from the south edge
        let fy = ((p.y - self.yll) / self.cellsize - 0.5).clamp(0.0, (self.nrows - 1) as f64);
        let c0 = (fx.floor() as usize).min(self.ncols.saturating_sub(2));
        let s0 = (fy.floor() as usize).min(self.nrows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.ncols - 1);
        let s1 = (s0 + 1).min(self.nrows - 1);
        let tx = fx - c0 as f64;
        let ty = fy - s0 as f64;
        let row = |s: usize| self.nrows - 1 - s;
        let corners = [
            (s0, c0, (1.0 - ty) * (1.0 - tx)),
            (s0, c1, (1.0 - ty) * tx),
            (s1, c0, ty * (1.0 - tx)),
            (s1, c1, ty * tx),
        ];
        let mut z = 0.0;
        for (s, c, w) in corners {
            if w > 0.0 {
                z += w * self.value(row(s), c)?;
            }
        }
        Some(z)
    }
}
