//! Named initial masks, written `NAME:ARGS` on the command line.
//!
//! Arguments are in normalized units (pixel centers at `(k + 0.5) h`), with
//! `x` along columns and `y` along rows.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Shape};

#[derive(Clone, Debug, PartialEq)]
pub enum InitShape {
    /// `circle:cx,cy,r`
    Circle { cx: f64, cy: f64, r: f64 },
    /// `rectangle:x0,y0,x1,y1`
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// `two-circles:cx1,cy1,cx2,cy2,r`
    TwoCircles { c1: (f64, f64), c2: (f64, f64), r: f64 },
    /// `annulus:cx,cy,r_outer,r_inner`
    Annulus { cx: f64, cy: f64, outer: f64, inner: f64 },
    /// `checkerboard-seeds:period,r`: discs on the even cells of a checkerboard.
    CheckerboardSeeds { period: f64, r: f64 },
}

impl InitShape {
    pub fn name(&self) -> &'static str {
        match self {
            InitShape::Circle { .. } => "circle",
            InitShape::Rectangle { .. } => "rectangle",
            InitShape::TwoCircles { .. } => "two-circles",
            InitShape::Annulus { .. } => "annulus",
            InitShape::CheckerboardSeeds { .. } => "checkerboard-seeds",
        }
    }

    pub fn rasterize(&self, shape: Shape) -> BinaryMask {
        let h = shape.spacing();
        BinaryMask::from_fn(shape, |r, c| {
            let (x, y) = ((c as f64 + 0.5) * h, (r as f64 + 0.5) * h);
            self.contains(x, y)
        })
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let dist2 = |cx: f64, cy: f64| (x - cx).powi(2) + (y - cy).powi(2);
        match *self {
            InitShape::Circle { cx, cy, r } => dist2(cx, cy) <= r * r,
            InitShape::Rectangle { x0, y0, x1, y1 } => {
                x >= x0.min(x1) && x <= x0.max(x1) && y >= y0.min(y1) && y <= y0.max(y1)
            }
            InitShape::TwoCircles { c1, c2, r } => {
                dist2(c1.0, c1.1) <= r * r || dist2(c2.0, c2.1) <= r * r
            }
            InitShape::Annulus { cx, cy, outer, inner } => {
                let d = dist2(cx, cy);
                d <= outer * outer && d > inner * inner
            }
            InitShape::CheckerboardSeeds { period, r } => {
                let (i, j) = ((x / period).floor(), (y / period).floor());
                if (i + j).rem_euclid(2.0) != 0.0 {
                    return false;
                }
                dist2((i + 0.5) * period, (j + 0.5) * period) <= r * r
            }
        }
    }
}

impl fmt::Display for InitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<f64> = match *self {
            InitShape::Circle { cx, cy, r } => vec![cx, cy, r],
            InitShape::Rectangle { x0, y0, x1, y1 } => vec![x0, y0, x1, y1],
            InitShape::TwoCircles { c1, c2, r } => vec![c1.0, c1.1, c2.0, c2.1, r],
            InitShape::Annulus { cx, cy, outer, inner } => vec![cx, cy, outer, inner],
            InitShape::CheckerboardSeeds { period, r } => vec![period, r],
        };
        let args: Vec<String> = args.iter().map(f64::to_string).collect();
        write!(f, "{}:{}", self.name(), args.join(","))
    }
}

fn bad(reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: "init-shape",
        reason: reason.into(),
    }
}

impl FromStr for InitShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| bad(format!("`{a}` is not a number")))
                })
                .collect::<Result<_>>()?
        };
        let expect = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(format!("{name} takes {n} arguments, got {}", args.len())))
            }
        };
        let positive = |v: f64, what: &str| {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(bad(format!("{what} must be > 0")))
            }
        };
        let shape = match name {
            "circle" => {
                expect(3)?;
                InitShape::Circle {
                    cx: args[0],
                    cy: args[1],
                    r: positive(args[2], "radius")?,
                }
            }
            "rectangle" => {
                expect(4)?;
                InitShape::Rectangle {
                    x0: args[0],
                    y0: args[1],
                    x1: args[2],
                    y1: args[3],
                }
            }
            "two-circles" => {
                expect(5)?;
                InitShape::TwoCircles {
                    c1: (args[0], args[1]),
                    c2: (args[2], args[3]),
                    r: positive(args[4], "radius")?,
                }
            }
            "annulus" => {
                expect(4)?;
                let inner = positive(args[3], "inner radius")?;
                if args[2] <= inner {
                    return Err(bad("outer radius must exceed inner radius"));
                }
                InitShape::Annulus {
                    cx: args[0],
                    cy: args[1],
                    outer: args[2],
                    inner,
                }
            }
            "checkerboard-seeds" => {
                expect(2)?;
                InitShape::CheckerboardSeeds {
                    period: positive(args[0], "period")?,
                    r: positive(args[1], "radius")?,
                }
            }
            other => {
                return Err(Error::UnknownName {
                    kind: "initializer",
                    name: other.to_string(),
                })
            }
        };
        Ok(shape)
    }
}
