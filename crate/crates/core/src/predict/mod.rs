//! Intra prediction, full-pel motion estimation/compensation and residual
//! formation.

mod intra;
mod motion;

pub(crate) use intra::predict_into;
pub use intra::{intra_predict, IntraMode, Neighbors};
pub use motion::{motion_compensate, motion_search, predict_mv, search_order, MotionVector, RefPicture, SadTable};

use crate::error::{Error, Result};
use crate::frame::Block;
use crate::xform::ResidualBlock;

/// `orig − pred` for square blocks.
pub fn build_residual(orig: &Block, pred: &Block) -> Result<ResidualBlock> {
    if orig.width != pred.width || orig.height != pred.height || orig.width != orig.height {
        return Err(Error::DimensionMismatch(format!(
            "residual of {}x{} original and {}x{} prediction",
            orig.width, orig.height, pred.width, pred.height
        )));
    }
    let values = orig.data.iter().zip(&pred.data).map(|(&o, &p)| i32::from(o) - i32::from(p)).collect();
    Ok(ResidualBlock::new(orig.width, values))
}
