pub mod analyze;
pub mod identify;
pub mod simulate;
pub mod table;
pub mod validate;

use std::path::{Path, PathBuf};

/// Relative output paths land inside the run's output directory.
pub fn resolve_out(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir.join(path)
    }
}

pub fn ensure_out_dir(out_dir: &Path) -> urysohn::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    Ok(())
}
