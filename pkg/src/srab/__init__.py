"""Adversarial attacks, robustness measures and defenses for single-image super-resolution."""

__version__ = "0.1.0"

from .errors import (SrabError, ConfigurationError, DataError, UnsupportedBitDepthError, WeightFileError,
                     BadMagicError, VersionMismatchError, ShapeMismatchError, TruncatedFileError,
                     EmptyRegionError)
from .tensor import (ConvKernel, conv2d_forward, conv2d_input_grad, relu_forward, relu_input_grad,
                     pixel_shuffle, pixel_shuffle_grad, bicubic_resize, bicubic_resize_grad,
                     finite_diff_gradient)
from .models import (SRModel, MicroEdsrConfig, PRESETS, build_bicubic_model, build_micro_edsr,
                     build_preset, model_forward, model_input_gradient)
from .training import train_micro_model
from .weights import save_weights, load_weights
from .attacks import (AttackConfig, Mask, AdversarialResult, parse_alpha, attack_loss,
                      attack_loss_gradient, ifgsm_basic, universal_attack, apply_universal, center_mask,
                      partial_attack, targeted_attack)
from .robustness import RobustnessReport, robustness_index
from .defenses import resize_defense, self_ensemble
from .imageio import quantize, load_png, save_png, Dataset, load_image_dir
from .evaluation import (psnr, outer_region_psnr, EvalReport, evaluate_attack, evaluate_sweep,
                         transfer_matrix, robustness_sweep, emit_report)
