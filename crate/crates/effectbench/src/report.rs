//! End-to-end benchmark orchestration and report writing.

use crate::error::Result;

pub fn placeholder() -> Result<()> {
    Ok(())
}
