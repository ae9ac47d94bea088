use serde::{Deserialize, Serialize};

use crate::model::{Event, SensorGeometry};

/// Partition of the sensor plane into `rows x cols` blocks of
/// `floor(W / cols) x floor(H / rows)` pixels; the last row and column absorb
/// the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    rows: u32,
    cols: u32,
    cell_w: u32,
    cell_h: u32,
}

impl GridLayout {
    /// `None` when the grid is finer than the sensor.
    pub fn new(geometry: SensorGeometry, rows: u32, cols: u32) -> Option<Self> {
        if rows == 0 || cols == 0 || cols > geometry.width || rows > geometry.height {
            return None;
        }
        Some(Self {
            rows,
            cols,
            cell_w: geometry.width / cols,
            cell_h: geometry.height / rows,
        })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    #[inline]
    pub fn cell_of(&self, x: u16, y: u16) -> usize {
        let c = (u32::from(x) / self.cell_w).min(self.cols - 1);
        let r = (u32::from(y) / self.cell_h).min(self.rows - 1);
        (r * self.cols + c) as usize
    }
}

/// Per-cell event totals of a volume and the busiest cell's excess over the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub m: u32,
    pub n: u32,
    pub cell_counts: Vec<u64>,
    pub mean: f64,
    pub max_excess: f64,
}

impl GridSummary {
    pub fn from_events(layout: &GridLayout, events: &[Event]) -> Self {
        let mut cells = vec![0u64; layout.cell_count()];
        for e in events {
            cells[layout.cell_of(e.x, e.y)] += 1;
        }
        Self::from_counts(layout, cells)
    }

    pub fn from_counts(layout: &GridLayout, cell_counts: Vec<u64>) -> Self {
        let total: u64 = cell_counts.iter().sum();
        let mean = total as f64 / cell_counts.len() as f64;
        Self {
            m: layout.rows,
            n: layout.cols,
            max_excess: max_excess(&cell_counts, mean),
            cell_counts,
            mean,
        }
    }

    pub fn total(&self) -> u64 {
        self.cell_counts.iter().sum()
    }
}

pub(crate) fn max_excess(cells: &[u64], mean: f64) -> f64 {
    let max = cells.iter().copied().max().unwrap_or(0);
    max as f64 - mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarity;

    #[test]
    fn remainder_goes_to_last_cell() {
        let g = SensorGeometry::davis346();
        let layout = GridLayout::new(g, 4, 4).unwrap();
        // 346 / 4 = 86, 260 / 4 = 65
        assert_eq!(layout.cell_of(85, 0), 0);
        assert_eq!(layout.cell_of(86, 0), 1);
        assert_eq!(layout.cell_of(345, 0), 3);
        assert_eq!(layout.cell_of(258, 0), 3);
        assert_eq!(layout.cell_of(0, 259), 12);
        assert_eq!(layout.cell_of(345, 259), 15);
    }

    #[test]
    fn every_pixel_lands_in_a_cell() {
        let g = SensorGeometry::new(13, 7).unwrap();
        let layout = GridLayout::new(g, 3, 5).unwrap();
        let mut hits = vec![0usize; layout.cell_count()];
        for y in 0..7u16 {
            for x in 0..13u16 {
                hits[layout.cell_of(x, y)] += 1;
            }
        }
        assert_eq!(hits.iter().sum::<usize>(), 91);
        assert!(hits.iter().all(|&h| h > 0));
        assert!(GridLayout::new(g, 8, 1).is_none());
    }

    #[test]
    fn summary_mean_and_excess() {
        let g = SensorGeometry::new(4, 4).unwrap();
        let layout = GridLayout::new(g, 2, 2).unwrap();
        let events: Vec<Event> = (0..6)
            .map(|i| Event::new(i, 0, 0, Polarity::Positive))
            .chain(std::iter::once(Event::new(9, 3, 3, Polarity::Negative)))
            .collect();
        let s = GridSummary::from_events(&layout, &events);
        assert_eq!(s.cell_counts, vec![6, 0, 0, 1]);
        assert_eq!(s.total(), 7);
        assert_eq!(s.mean, 7.0 / 4.0);
        assert_eq!(s.max_excess, 6.0 - 1.75);
    }
}
