//! Architecture configurations and the named sweep variants.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::CoordBounds;
use crate::nn::{count_params, infer_shape, LayerSpec};

fn conv_relu_pool(filters: usize, width: usize) -> [LayerSpec; 3] {
    [
        LayerSpec::conv(filters, width),
        LayerSpec::Relu,
        LayerSpec::pool(2),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedCompareConfig {
    /// Agents per sample (`Np`).
    pub group_size: usize,
    /// Frames per sample (`T`).
    pub window: usize,
    pub shared: Vec<LayerSpec>,
    /// Layers applied to each channel-concatenated (key, partner) pair.
    pub compare: Vec<LayerSpec>,
    pub num_classes: usize,
    /// Also feed the degenerate (key, key) pair, giving `Np` pair features
    /// instead of `Np - 1`.
    #[serde(default)]
    pub include_self_pair: bool,
    #[serde(default)]
    pub head_bias: bool,
    pub bounds: CoordBounds,
}

impl Default for SharedCompareConfig {
    fn default() -> Self {
        let mut compare = Vec::new();
        for (f, w) in [(128, 3), (128, 3), (256, 3), (512, 2)] {
            compare.extend(conv_relu_pool(f, w));
        }
        Self {
            group_size: 5,
            window: 16,
            shared: vec![
                LayerSpec::conv(64, 3),
                LayerSpec::Relu,
                LayerSpec::conv(128, 3),
                LayerSpec::Relu,
                LayerSpec::pool(2),
            ],
            compare,
            num_classes: 6,
            include_self_pair: false,
            head_bias: false,
            bounds: CoordBounds::RINK,
        }
    }
}

impl SharedCompareConfig {
    pub fn pairs(&self) -> usize {
        if self.include_self_pair {
            self.group_size
        } else {
            self.group_size - 1
        }
    }

    /// Compare layers with a trailing flatten.
    pub(crate) fn compare_layers(&self) -> Vec<LayerSpec> {
        let mut c = self.compare.clone();
        if c.last() != Some(&LayerSpec::Flatten) {
            c.push(LayerSpec::Flatten);
        }
        c
    }

    pub(crate) fn head_layers(&self) -> Vec<LayerSpec> {
        vec![LayerSpec::FullyConnected {
            outputs: self.num_classes,
            bias: self.head_bias,
        }]
    }

    pub fn shared_output_shape(&self) -> Result<(usize, usize), ModelError> {
        Ok(infer_shape(&self.shared, (2, self.window))?)
    }

    /// Flattened feature length of one compare output.
    pub fn pair_feature_size(&self) -> Result<usize, ModelError> {
        let (c, t) = self.shared_output_shape()?;
        Ok(infer_shape(&self.compare_layers(), (2 * c, t))?.0)
    }

    /// Input length of the fully connected head.
    pub fn head_input_size(&self) -> Result<usize, ModelError> {
        Ok(self.pair_feature_size()? * self.pairs())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.group_size < 2 {
            return Err(ModelError::Config(
                "shared-compare needs at least 2 agents".into(),
            ));
        }
        if self.window == 0 || self.num_classes == 0 {
            return Err(ModelError::Config(
                "window and class count must be positive".into(),
            ));
        }
        self.head_input_size()?;
        self.bounds.validate()?;
        Ok(())
    }

    pub fn count_params(&self) -> Result<usize, ModelError> {
        let (c, t) = self.shared_output_shape()?;
        Ok(count_params(&self.shared, (2, self.window))?
            + count_params(&self.compare_layers(), (2 * c, t))?
            + count_params(&self.head_layers(), (self.head_input_size()?, 1))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedConfig {
    /// Players per group (`Np`).
    pub players: usize,
    pub includes_ball: bool,
    pub window: usize,
    /// Convolutional trunk, optionally followed by a flatten and a fully
    /// connected tail. The class head is appended automatically.
    pub layers: Vec<LayerSpec>,
    pub num_classes: usize,
    #[serde(default)]
    pub head_bias: bool,
    pub bounds: CoordBounds,
}

impl Default for StackedConfig {
    fn default() -> Self {
        Self::five_conv([5, 3, 3, 3, 3], [64, 128, 256, 512, 512])
    }
}

/// Neurons in each layer of the optional fully connected tail.
pub const FC_TAIL_WIDTH: usize = 1024;

impl StackedConfig {
    fn from_convs(convs: &[(usize, usize)], fc_tail: usize) -> Self {
        let mut layers = Vec::new();
        for &(f, w) in convs {
            layers.extend(conv_relu_pool(f, w));
        }
        if fc_tail > 0 {
            layers.push(LayerSpec::Flatten);
            for _ in 0..fc_tail {
                layers.push(LayerSpec::FullyConnected {
                    outputs: FC_TAIL_WIDTH,
                    bias: true,
                });
                layers.push(LayerSpec::Relu);
            }
        }
        Self {
            players: 5,
            includes_ball: true,
            window: 200,
            layers,
            num_classes: 30,
            head_bias: false,
            bounds: CoordBounds::COURT,
        }
    }

    /// Five conv layers with the given bottom-up filter sizes and counts.
    pub fn five_conv(widths: [usize; 5], filters: [usize; 5]) -> Self {
        let convs: Vec<_> = filters.into_iter().zip(widths).collect();
        Self::from_convs(&convs, 0)
    }

    /// `n`-conv model: first filter size 5 then 3; 64 filters doubling per
    /// layer except that the fifth repeats the fourth; `fc_tail` fully
    /// connected layers of 1024 on top.
    pub fn depth_variant(n: usize, fc_tail: usize) -> Result<Self, ModelError> {
        if !(1..=5).contains(&n) {
            return Err(ModelError::Config(format!(
                "depth variant needs 1..=5 conv layers, got {n}"
            )));
        }
        let filters = Self::filter_progression(64);
        let widths = [5, 3, 3, 3, 3];
        let convs: Vec<_> = filters.into_iter().zip(widths).take(n).collect();
        Ok(Self::from_convs(&convs, fc_tail))
    }

    /// Five conv layers with `base` filters in the first layer.
    pub fn base_filters_variant(base: usize) -> Self {
        Self::five_conv([5, 3, 3, 3, 3], Self::filter_progression(base))
    }

    /// `base, 2b, 4b, 8b, 8b`.
    pub fn filter_progression(base: usize) -> [usize; 5] {
        [base, 2 * base, 4 * base, 8 * base, 8 * base]
    }

    pub fn input_channels(&self) -> usize {
        2 * (self.players + usize::from(self.includes_ball))
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.input_channels(), self.window)
    }

    /// Trunk + tail + class head.
    pub(crate) fn all_layers(&self) -> Vec<LayerSpec> {
        let mut l = self.layers.clone();
        if !l.contains(&LayerSpec::Flatten) {
            l.push(LayerSpec::Flatten);
        }
        l.push(LayerSpec::FullyConnected {
            outputs: self.num_classes,
            bias: self.head_bias,
        });
        l
    }

    /// Shape after the trunk's last pool (before flatten).
    pub fn trunk_output_shape(&self) -> Result<(usize, usize), ModelError> {
        let trunk: Vec<_> = self
            .layers
            .iter()
            .take_while(|l| **l != LayerSpec::Flatten)
            .copied()
            .collect();
        Ok(infer_shape(&trunk, self.input_shape())?)
    }

    pub fn flatten_size(&self) -> Result<usize, ModelError> {
        let (c, t) = self.trunk_output_shape()?;
        Ok(c * t)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.players == 0 || self.window == 0 || self.num_classes == 0 {
            return Err(ModelError::Config(
                "players, window and classes must be positive".into(),
            ));
        }
        infer_shape(&self.all_layers(), self.input_shape())?;
        self.bounds.validate()?;
        Ok(())
    }

    pub fn count_params(&self) -> Result<usize, ModelError> {
        Ok(count_params(&self.all_layers(), self.input_shape())?)
    }
}

/// Either architecture, as stored in config files and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", rename_all = "snake_case")]
pub enum ModelSpec {
    SharedCompare(SharedCompareConfig),
    Stacked(StackedConfig),
}

impl ModelSpec {
    pub fn num_classes(&self) -> usize {
        match self {
            ModelSpec::SharedCompare(c) => c.num_classes,
            ModelSpec::Stacked(c) => c.num_classes,
        }
    }

    pub fn count_params(&self) -> Result<usize, ModelError> {
        match self {
            ModelSpec::SharedCompare(c) => c.count_params(),
            ModelSpec::Stacked(c) => c.count_params(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSpec::SharedCompare(c) => c.validate(),
            ModelSpec::Stacked(c) => c.validate(),
        }
    }
}

/// Named stacked-network variants of the layer-count, filter-size and
/// filter-count sweeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepVariant {
    /// `2conv` ... `5conv`, `5conv+2fc`.
    Depth(String),
    /// Bottom-up filter sizes of a five-conv model, e.g. `"5 3 3 3 3"`.
    FilterSizes(String),
    /// First-layer filter count of a five-conv model.
    BaseFilters(usize),
}

pub const DEPTH_VARIANTS: [&str; 5] = ["2conv", "3conv", "4conv", "5conv", "5conv+2fc"];
pub const FILTER_SIZE_VARIANTS: [&str; 4] = ["3 3 3 2 2", "5 3 3 3 3", "7 5 5 3 3", "9 7 7 5 5"];
pub const BASE_FILTER_VARIANTS: [usize; 4] = [16, 32, 64, 128];

impl SweepVariant {
    /// Parses a variant label: `Nconv[+Kfc]`, five space-separated filter
    /// sizes, or `base=N`.
    pub fn parse(label: &str) -> Result<Self, ModelError> {
        let l = label.trim();
        if let Some(n) = l.strip_prefix("base=") {
            return n
                .trim()
                .parse()
                .map(SweepVariant::BaseFilters)
                .map_err(|_| ModelError::Config(format!("bad base filter count in {label:?}")));
        }
        if l.contains("conv") {
            return Ok(SweepVariant::Depth(l.to_string()));
        }
        if l.split_whitespace().count() == 5 {
            return Ok(SweepVariant::FilterSizes(l.to_string()));
        }
        Err(ModelError::Config(format!(
            "unrecognised sweep variant {label:?}"
        )))
    }

    pub fn label(&self) -> String {
        match self {
            SweepVariant::Depth(s) | SweepVariant::FilterSizes(s) => s.clone(),
            SweepVariant::BaseFilters(b) => format!("base={b}"),
        }
    }

    /// Applies the variant's layer list to `template`, keeping its input and
    /// class settings.
    pub fn build(&self, template: &StackedConfig) -> Result<StackedConfig, ModelError> {
        let layers = match self {
            SweepVariant::Depth(s) => {
                let (conv, fc) = match s.split_once('+') {
                    Some((c, f)) => (c, f),
                    None => (s.as_str(), "0fc"),
                };
                let n: usize = conv
                    .strip_suffix("conv")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| ModelError::Config(format!("bad depth variant {s:?}")))?;
                let k: usize = fc
                    .strip_suffix("fc")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| ModelError::Config(format!("bad depth variant {s:?}")))?;
                StackedConfig::depth_variant(n, k)?.layers
            }
            SweepVariant::FilterSizes(s) => {
                let widths: Vec<usize> = s
                    .split_whitespace()
                    .map(|w| w.parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ModelError::Config(format!("bad filter sizes {s:?}")))?;
                let widths: [usize; 5] = widths.try_into().map_err(|_| {
                    ModelError::Config(format!("need five filter sizes, got {s:?}"))
                })?;
                StackedConfig::five_conv(widths, [64, 128, 256, 512, 512]).layers
            }
            SweepVariant::BaseFilters(b) => StackedConfig::base_filters_variant(*b).layers,
        };
        let cfg = StackedConfig {
            layers,
            ..template.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_compare_defaults() {
        let c = SharedCompareConfig::default();
        c.validate().unwrap();
        assert_eq!(c.shared_output_shape().unwrap(), (128, 8));
        // 16 -> 8 (shared) -> 4 -> 2 -> 1 -> 1
        assert_eq!(c.pair_feature_size().unwrap(), 512);
        assert_eq!(c.head_input_size().unwrap(), 4 * 512);
        let self_pair = SharedCompareConfig {
            include_self_pair: true,
            ..c.clone()
        };
        assert_eq!(self_pair.head_input_size().unwrap(), 5 * 512);
        assert_eq!(count_params(&c.shared[..1], (2, 16)).unwrap(), 384);
    }

    #[test]
    fn stacked_defaults() {
        let c = StackedConfig::default();
        c.validate().unwrap();
        assert_eq!(c.input_shape(), (12, 200));
        // 200 -> 100 -> 50 -> 25 -> 13 -> 7
        assert_eq!(c.trunk_output_shape().unwrap(), (512, 7));
        assert_eq!(c.flatten_size().unwrap(), 3584);
        let expected =
            12 * 5 * 64 + 64 * 3 * 128 + 128 * 3 * 256 + 256 * 3 * 512 + 512 * 3 * 512 + 3584 * 30;
        assert_eq!(c.count_params().unwrap(), expected);
    }

    #[test]
    fn depth_variants() {
        assert_eq!(
            StackedConfig::depth_variant(5, 0).unwrap(),
            StackedConfig::default()
        );
        let two = StackedConfig::depth_variant(2, 0).unwrap();
        assert_eq!(two.trunk_output_shape().unwrap(), (128, 50));
        let fc = SweepVariant::parse("5conv+2fc")
            .unwrap()
            .build(&StackedConfig::default())
            .unwrap();
        let fc_params = 3584 * 1024 + 1024 + 1024 * 1024 + 1024 + 1024 * 30;
        let conv_params = StackedConfig::default().count_params().unwrap() - 3584 * 30;
        assert_eq!(fc.count_params().unwrap(), conv_params + fc_params);
        assert!(StackedConfig::depth_variant(6, 0).is_err());
    }

    #[test]
    fn all_named_variants_build() {
        let t = StackedConfig::default();
        for v in DEPTH_VARIANTS.iter().chain(FILTER_SIZE_VARIANTS.iter()) {
            SweepVariant::parse(v).unwrap().build(&t).unwrap();
        }
        for b in BASE_FILTER_VARIANTS {
            let c = SweepVariant::BaseFilters(b).build(&t).unwrap();
            assert_eq!(c.trunk_output_shape().unwrap(), (8 * b, 7));
        }
        assert_eq!(
            SweepVariant::parse("5 3 3 3 3").unwrap().build(&t).unwrap(),
            t
        );
        assert_eq!(
            SweepVariant::parse("base=64").unwrap(),
            SweepVariant::BaseFilters(64)
        );
        assert!(SweepVariant::parse("0 3 3 3 3").unwrap().build(&t).is_err());
        assert!(SweepVariant::parse("banana").is_err());
    }

    #[test]
    fn doubling_filters_doubles_layer_params() {
        let one = count_params(&[LayerSpec::conv(64, 3)], (2, 16)).unwrap();
        let two = count_params(&[LayerSpec::conv(128, 3)], (2, 16)).unwrap();
        assert_eq!(two, 2 * one);
    }
}
