from training.adam import Adam
from training.implicit_gradient import ParameterGradients, implicit_gradient
from training.mask_finetuner import FinetuneResult, MaskFinetuner, finetune_mask_provider
from training.model_init import default_model
from training.parameters import model_parameters, trainable_groups, with_model_parameters
from training.patches import extract_patches, load_images
from training.trainer import DenoiserTrainer, TrainingResult, lr_schedule, train_denoiser

__all__ = ["Adam", "ParameterGradients", "implicit_gradient", "FinetuneResult", "MaskFinetuner",
           "finetune_mask_provider", "default_model", "model_parameters", "trainable_groups",
           "with_model_parameters", "extract_patches", "load_images", "DenoiserTrainer", "TrainingResult",
           "lr_schedule", "train_denoiser"]
