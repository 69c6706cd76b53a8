use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{Mask, Plane};
use crate::numkernel::{
    read_checkpoint, write_checkpoint, BatchNormParams, LayerParams, Network, Real, Record, RecordData, Tensor,
};

use super::{propagate_mask, Architecture, ModelKind, PATCH};

/// Patches per inference batch.
const INFER_BATCH: usize = 64;

/// A network with the standard architecture and its application modes.
#[derive(Clone, Debug)]
pub struct Model<T: Real> {
    pub kind: ModelKind,
    pub arch: Architecture,
    pub net: Network<T>,
}

/// 1×d×p×q output of the fully convolutional pass over an m×n image.
#[derive(Clone, Debug)]
pub struct OutputMap<T> {
    pub map: Tensor<T>,
    pub source_dims: (usize, usize),
}

impl<T: Real> OutputMap<T> {
    pub fn d(&self) -> usize {
        self.map.c()
    }

    pub fn p(&self) -> usize {
        self.map.h()
    }

    pub fn q(&self) -> usize {
        self.map.w()
    }

    pub fn value(&self, ch: usize, x: usize, y: usize) -> T {
        self.map.at(0, ch, x, y)
    }

    /// All d channels at one location.
    pub fn cell(&self, x: usize, y: usize) -> Vec<T> {
        (0..self.d()).map(|ch| self.value(ch, x, y)).collect()
    }

    /// 1-based class with the largest value at (x, y).
    pub fn argmax(&self, x: usize, y: usize) -> usize {
        argmax_class(&self.cell(x, y))
    }
}

/// 1-based index of the maximum; ties go to the lower class.
pub fn argmax_class<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best + 1
}

fn plane_tensor<T: Real>(p: &Plane) -> Tensor<T> {
    let data = p.data().iter().map(|&v| T::of(v as f64)).collect();
    Tensor::from_vec([1, 1, p.h(), p.w()], data).expect("sized")
}

impl<T: Real> Model<T> {
    /// Fresh Kaiming-initialized model.
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let arch = Architecture::standard(kind.head());
        let mut rng = crate::numkernel::seeded_rng(seed);
        let layers = arch
            .layers
            .iter()
            .map(|l| LayerParams::kaiming(l.in_ch, l.out_ch, l.kernel, l.bn, &mut rng))
            .collect();
        let net = Network::new(layers, arch.steps.clone()).expect("standard architecture is consistent");
        Model { kind, arch, net }
    }

    pub fn head(&self) -> usize {
        self.arch.head
    }

    /// Network output for one 64×64 patch in inference mode.
    pub fn forward_patch(&self, patch: &Plane) -> Result<Vec<T>> {
        Ok(self.forward_patches(std::slice::from_ref(patch))?.remove(0))
    }

    pub fn forward_patches(&self, patches: &[Plane]) -> Result<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(patches.len());
        for chunk in patches.chunks(INFER_BATCH) {
            let batch = patch_batch(chunk)?;
            let y = self.net.infer(&batch)?;
            out.extend(y.data().chunks(self.head()).map(<[T]>::to_vec));
        }
        Ok(out)
    }

    /// Fully convolutional pass over a whole image in inference mode.
    pub fn forward_map(&self, image: &Plane) -> Result<OutputMap<T>> {
        if image.h() < PATCH || image.w() < PATCH {
            return Err(Error::InvalidArgument(format!(
                "image {}×{} is smaller than {PATCH}×{PATCH}",
                image.h(),
                image.w()
            )));
        }
        let map = self.net.infer(&plane_tensor(image))?;
        Ok(OutputMap {
            map,
            source_dims: (image.h(), image.w()),
        })
    }

    pub fn propagate(&self, mask: &Mask) -> Result<Mask> {
        propagate_mask(&self.arch, mask)
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            kind: self.kind,
            arch: self.arch.clone(),
            net: self.net.cast(),
        }
    }

    /// Checkpoint records; `stamp` is stored verbatim as `meta.config`.
    pub fn to_records(&self, stamp: Option<&str>) -> Vec<Record> {
        let wrap = |v: &[T]| -> RecordData {
            match T::DTYPE {
                0 => RecordData::F32(v.iter().map(|x| x.as_f64() as f32).collect()),
                _ => RecordData::F64(v.iter().map(|x| x.as_f64()).collect()),
            }
        };
        let rec = |name: String, shape: Vec<usize>, v: &[T]| Record::new(name, shape, wrap(v)).expect("sized");
        let mut out = vec![Record::new(
            "meta.kind",
            vec![self.kind.name().len()],
            RecordData::U8(self.kind.name().as_bytes().to_vec()),
        )
        .expect("sized")];
        if let Some(s) = stamp {
            out.push(Record::new("meta.config", vec![s.len()], RecordData::U8(s.as_bytes().to_vec())).expect("sized"));
        }
        for (i, l) in self.net.layers.iter().enumerate() {
            out.push(rec(format!("layer{i}.weight"), l.weights.shape().to_vec(), l.weights.data()));
            out.push(rec(format!("layer{i}.bias"), vec![l.bias.len()], &l.bias));
            if let Some(bn) = &l.bn {
                let c = bn.channels();
                out.push(rec(format!("layer{i}.bn.gamma"), vec![c], &bn.gamma));
                out.push(rec(format!("layer{i}.bn.beta"), vec![c], &bn.beta));
                out.push(rec(format!("layer{i}.bn.running_mean"), vec![c], &bn.running_mean));
                out.push(rec(format!("layer{i}.bn.running_var"), vec![c], &bn.running_var));
                out.push(rec(format!("layer{i}.bn.momentum"), vec![1], &[bn.momentum]));
                out.push(rec(format!("layer{i}.bn.eps"), vec![1], &[bn.eps]));
            }
        }
        out
    }

    /// Rebuilds a model from checkpoint records, converting the stored dtype
    /// to `T`. Returns the config stamp if present.
    pub fn from_records(records: &[Record]) -> Result<(Self, Option<String>)> {
        let find = |name: &str| records.iter().find(|r| r.name == name);
        let text = |name: &str| -> Option<String> {
            match &find(name)?.data {
                RecordData::U8(b) => String::from_utf8(b.clone()).ok(),
                _ => None,
            }
        };
        let kind: ModelKind = text("meta.kind")
            .ok_or_else(|| Error::format("checkpoint", "missing meta.kind"))?
            .parse()?;
        let mut model = Model::<T>::new(kind, 0);
        let values = |name: String, expect: &[usize]| -> Result<Vec<T>> {
            let r = find(&name).ok_or_else(|| Error::format("checkpoint", format!("missing {name}")))?;
            if r.shape != expect {
                return Err(Error::shape("checkpoint", &r.shape, expect));
            }
            Ok(r.data.to_f64().into_iter().map(T::of).collect())
        };
        for (i, l) in model.net.layers.iter_mut().enumerate() {
            let wshape = l.weights.shape();
            l.weights = Tensor::from_vec(wshape, values(format!("layer{i}.weight"), &wshape)?)?;
            l.bias = values(format!("layer{i}.bias"), &[l.bias.len()])?;
            if let Some(bn) = &mut l.bn {
                let c = bn.channels();
                let running_var = values(format!("layer{i}.bn.running_var"), &[c])?;
                if running_var.iter().any(|v| !(*v > T::zero())) {
                    return Err(Error::format("checkpoint", format!("layer{i} running variance not positive")));
                }
                *bn = BatchNormParams {
                    gamma: values(format!("layer{i}.bn.gamma"), &[c])?,
                    beta: values(format!("layer{i}.bn.beta"), &[c])?,
                    running_mean: values(format!("layer{i}.bn.running_mean"), &[c])?,
                    running_var,
                    momentum: values(format!("layer{i}.bn.momentum"), &[1])?[0],
                    eps: values(format!("layer{i}.bn.eps"), &[1])?[0],
                };
            }
        }
        Ok((model, text("meta.config")))
    }

    pub fn save(&self, path: &Path, stamp: Option<&str>) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_checkpoint(std::io::BufWriter::new(file), &self.to_records(stamp)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, Option<String>)> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_records(&read_checkpoint(std::io::BufReader::new(file))?)
    }
}

/// Stacks 64×64 planes into an n×1×64×64 tensor.
pub(crate) fn patch_batch<T: Real>(patches: &[Plane]) -> Result<Tensor<T>> {
    let mut data = Vec::with_capacity(patches.len() * PATCH * PATCH);
    for p in patches {
        if p.h() != PATCH || p.w() != PATCH {
            return Err(Error::shape("patch", (PATCH, PATCH), (p.h(), p.w())));
        }
        data.extend(p.data().iter().map(|&v| T::of(v as f64)));
    }
    Tensor::from_vec([patches.len(), 1, PATCH, PATCH], data)
}
