use serde::{Deserialize, Serialize};

use super::{Point, VrpInstance};

/// One of the eight symmetries of the unit square.
///
/// 0 is the identity, 1..=3 rotate by 90/180/270 degrees, 4..=7 reflect about
/// the vertical axis, the horizontal axis, the main and the anti diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugmentationId(u8);

impl AugmentationId {
    pub const COUNT: usize = 8;
    pub const IDENTITY: AugmentationId = AugmentationId(0);

    pub fn new(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(AugmentationId(index as u8))
    }

    pub fn all() -> impl Iterator<Item = AugmentationId> {
        (0..Self::COUNT as u8).map(AugmentationId)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn apply(self, [x, y]: Point) -> Point {
        match self.0 {
            0 => [x, y],
            1 => [1.0 - y, x],
            2 => [1.0 - x, 1.0 - y],
            3 => [y, 1.0 - x],
            4 => [1.0 - x, y],
            5 => [x, 1.0 - y],
            6 => [y, x],
            7 => [1.0 - y, 1.0 - x],
            _ => unreachable!("augmentation index is checked on construction"),
        }
    }
}

/// Applies a symmetry to every coordinate; demands and capacity are untouched.
pub fn augment(instance: &VrpInstance, t: AugmentationId) -> VrpInstance {
    VrpInstance {
        coords: instance.coords.iter().map(|&p| t.apply(p)).collect(),
        ..instance.clone()
    }
}
