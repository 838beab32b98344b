//! Wavefront OBJ/MTL geometry with a diffuse texture image.
//!
//! Only `v`, `vt`, `f`, `mtllib` and `usemtl` records are interpreted; any
//! other record (normals, groups, smoothing) is skipped. Polygons are
//! fan-triangulated from their first corner. From the material file only the
//! diffuse map `map_Kd` is used.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{ImageError, RgbImage};
use thiserror::Error;

use crate::mesh::{MeshError, Point, Rgb, TextureImage, TexturedMesh, Uv};

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: unsupported image format: {message}")]
    UnsupportedImage { path: PathBuf, message: String },
    #[error("{path}: corrupt image: {message}")]
    CorruptImage { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Mesh {
        path: PathBuf,
        #[source]
        source: MeshError,
    },
}

/// A loaded mesh and the files it came from.
#[derive(Debug, Clone)]
pub struct MeshBundle {
    pub mesh: TexturedMesh,
    pub obj_path: PathBuf,
    pub mtl_path: Option<PathBuf>,
    pub texture_path: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ObjError + '_ {
    move |source| ObjError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Strips comments and surrounding whitespace (including `\r`).
fn clean(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim()),
        None => (line, ""),
    }
}

struct ObjParser<'a> {
    path: &'a Path,
    line: usize,
}

impl ObjParser<'_> {
    fn error(&self, message: impl Into<String>) -> ObjError {
        ObjError::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn floats(&self, rest: &str, min: usize, what: &str) -> Result<Vec<f64>, ObjError> {
        let values = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.error(format!("bad number {t:?} in {what} record"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() < min {
            return Err(self.error(format!("{what} record needs at least {min} values")));
        }
        Ok(values)
    }

    /// Resolves a 1-based (or negative, relative) OBJ index.
    fn index(&self, token: &str, count: usize, what: &str) -> Result<usize, ObjError> {
        let raw: i64 = token
            .parse()
            .map_err(|_| self.error(format!("bad {what} index {token:?}")))?;
        let resolved = if raw > 0 {
            raw - 1
        } else if raw < 0 {
            count as i64 + raw
        } else {
            return Err(self.error(format!("{what} index 0 is invalid")));
        };
        if resolved < 0 || resolved >= count as i64 {
            return Err(self.error(format!("{what} index {raw} out of range ({count} defined)")));
        }
        Ok(resolved as usize)
    }
}

/// Reads an OBJ file, its material library and the diffuse texture.
pub fn load_mesh(path: &Path) -> Result<MeshBundle, ObjError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut parser = ObjParser { path, line: 0 };
    let mut positions: Vec<Point> = Vec::new();
    let mut texcoords: Vec<Uv> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut corner_uvs: Vec<[Uv; 3]> = Vec::new();
    let mut untextured_faces = 0usize;
    let mut mtllib: Option<String> = None;
    let mut material: Option<String> = None;

    for (i, raw) in text.lines().enumerate() {
        parser.line = i + 1;
        let line = clean(raw);
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = split_keyword(line);
        match keyword {
            "v" => {
                let v = parser.floats(rest, 3, "v")?;
                positions.push(Point::new(v[0], v[1], v[2]));
            }
            "vt" => {
                let v = parser.floats(rest, 2, "vt")?;
                texcoords.push(Uv::new(v[0], v[1]));
            }
            "f" => {
                let mut corners = Vec::new();
                for token in rest.split_whitespace() {
                    let mut parts = token.split('/');
                    let v = parser.index(parts.next().unwrap_or(""), positions.len(), "vertex")?;
                    let vt = match parts.next() {
                        Some(t) if !t.is_empty() => Some(parser.index(t, texcoords.len(), "texture")?),
                        _ => None,
                    };
                    corners.push((v, vt));
                }
                if corners.len() < 3 {
                    return Err(parser.error("face needs at least 3 corners"));
                }
                let textured = corners.iter().filter(|c| c.1.is_some()).count();
                if textured != 0 && textured != corners.len() {
                    return Err(parser.error("face mixes textured and untextured corners"));
                }
                if textured == 0 {
                    untextured_faces += 1;
                }
                if untextured_faces > 0 && (textured != 0 || !corner_uvs.is_empty()) {
                    return Err(parser.error("mesh mixes textured and untextured faces"));
                }
                for j in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[j], corners[j + 1]];
                    let idx = tri.map(|c| c.0);
                    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                        return Err(parser.error("degenerate face repeats a vertex"));
                    }
                    triangles.push(idx);
                    if textured != 0 {
                        corner_uvs.push(tri.map(|c| texcoords[c.1.unwrap()]));
                    }
                }
            }
            "mtllib" if mtllib.is_none() && !rest.is_empty() => mtllib = Some(rest.to_string()),
            "usemtl" if material.is_none() && !rest.is_empty() => material = Some(rest.to_string()),
            _ => {}
        }
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut mtl_path = None;
    let mut texture_path = None;
    let mut texture = None;
    if let Some(lib) = mtllib {
        let lib_path = dir.join(lib);
        let map = diffuse_map(&lib_path, material.as_deref())?;
        mtl_path = Some(lib_path.clone());
        if let (Some(map), false) = (map, corner_uvs.is_empty()) {
            let tex_path = lib_path.parent().unwrap_or(Path::new(".")).join(map);
            texture = Some(Arc::new(load_texture(&tex_path)?));
            texture_path = Some(tex_path);
        }
    }
    let mesh = TexturedMesh::new(positions, triangles, corner_uvs, texture).map_err(|source| ObjError::Mesh {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(MeshBundle {
        mesh,
        obj_path: path.to_path_buf(),
        mtl_path,
        texture_path,
    })
}

/// `map_Kd` of the named material, or of the first material when unnamed.
fn diffuse_map(path: &Path, material: Option<&str>) -> Result<Option<String>, ObjError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut current: Option<String> = None;
    let mut first_map: Option<String> = None;
    for raw in text.lines() {
        let line = clean(raw);
        let (keyword, rest) = split_keyword(line);
        match keyword {
            "newmtl" => current = Some(rest.to_string()),
            "map_Kd" if !rest.is_empty() => {
                // Options such as `-s 1 1 1` precede the file name.
                let file = if rest.starts_with('-') {
                    rest.split_whitespace().last().unwrap_or(rest)
                } else {
                    rest
                };
                match material {
                    Some(name) if current.as_deref() == Some(name) => return Ok(Some(file.to_string())),
                    None if first_map.is_none() => first_map = Some(file.to_string()),
                    _ => {}
                }
            }
            _ => {}
        }
    }
    Ok(first_map)
}

/// Loads a PNG or JPEG, scaling 8-bit channels to `[0, 1]`.
pub fn load_texture(path: &Path) -> Result<TextureImage, ObjError> {
    let img = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(|e| match e {
            ImageError::Unsupported(u) => ObjError::UnsupportedImage {
                path: path.to_path_buf(),
                message: u.to_string(),
            },
            ImageError::IoError(source) => ObjError::CorruptImage {
                path: path.to_path_buf(),
                message: source.to_string(),
            },
            other => ObjError::CorruptImage {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?
        .to_rgb8();
    let pixels = img
        .pixels()
        .map(|p| Rgb::new(p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0))
        .collect();
    TextureImage::new(img.width() as usize, img.height() as usize, pixels).map_err(|source| ObjError::Mesh {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes an 8-bit PNG.
pub fn save_texture(texture: &TextureImage, path: &Path) -> Result<(), ObjError> {
    let mut img = RgbImage::new(texture.width() as u32, texture.height() as u32);
    for (dst, src) in img.pixels_mut().zip(texture.pixels()) {
        *dst = image::Rgb(src.map(|v| (v * 255.0).round() as u8).into());
    }
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| ObjError::CorruptImage {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `path` (an `.obj`), plus `<stem>.mtl` and `<stem>.png` next to it
/// when the mesh is textured. Coordinates use shortest round-trip decimal
/// formatting, so reloading reproduces them exactly.
pub fn save_mesh(mesh: &TexturedMesh, path: &Path) -> Result<MeshBundle, ObjError> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());
    let dir = path.parent().unwrap_or(Path::new("."));
    let textured = mesh.is_textured();
    let mut out = String::new();
    let (mut mtl_path, mut texture_path) = (None, None);
    if textured {
        let mtl_name = format!("{stem}.mtl");
        let tex_name = format!("{stem}.png");
        writeln!(out, "mtllib {mtl_name}\nusemtl material_0").unwrap();
        let mtl = format!("newmtl material_0\nKa 1 1 1\nKd 1 1 1\nmap_Kd {tex_name}\n");
        let mp = dir.join(&mtl_name);
        fs::write(&mp, mtl).map_err(io_err(&mp))?;
        let tp = dir.join(&tex_name);
        save_texture(mesh.texture().unwrap(), &tp)?;
        mtl_path = Some(mp);
        texture_path = Some(tp);
    }
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
    }
    let with_uvs = mesh.has_uvs();
    if with_uvs {
        for tri in mesh.corner_uvs() {
            for uv in tri {
                writeln!(out, "vt {} {}", uv.x, uv.y).unwrap();
            }
        }
    }
    for (t, [a, b, c]) in mesh.triangles().iter().enumerate() {
        if with_uvs {
            let base = 3 * t + 1;
            writeln!(out, "f {}/{} {}/{} {}/{}", a + 1, base, b + 1, base + 1, c + 1, base + 2).unwrap();
        } else {
            writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1).unwrap();
        }
    }
    fs::write(path, out).map_err(io_err(path))?;
    Ok(MeshBundle {
        mesh: mesh.clone(),
        obj_path: path.to_path_buf(),
        mtl_path,
        texture_path,
    })
}
