"""Trainable encoder-decoder with antecedent copying."""

from .config import (BOS, EOS, FORMAT_VERSION, ModelConfig, TrainingExample,
                     Vocab, build_vocab, load_model, save_model)
from .decoding import assignment_accuracy, forced_copy_eval, greedy_decode_text
from .gradcheck import grad_check, toy_example
from .network import (DecoderStep, EncoderPack, copy_scores, decode_step,
                      encode, forced_assignments, greedy_decode,
                      init_decoder_state, init_params, loss_and_grads,
                      sequence_nll, token_repr)
from .synthetic import SynthDataset, SynthExample, encode_example, synth_dataset
from .training import AdamState, CopyParser, TrainingPlan, mean_loss, train

__all__ = [
    "AdamState", "BOS", "CopyParser", "DecoderStep", "EOS", "EncoderPack",
    "FORMAT_VERSION", "ModelConfig", "SynthDataset", "SynthExample",
    "TrainingExample", "TrainingPlan", "Vocab", "assignment_accuracy",
    "build_vocab", "copy_scores", "decode_step", "encode", "encode_example",
    "forced_assignments", "forced_copy_eval", "grad_check", "greedy_decode",
    "greedy_decode_text", "init_decoder_state", "init_params",
    "load_model", "loss_and_grads", "mean_loss", "save_model",
    "sequence_nll", "synth_dataset", "token_repr", "toy_example", "train",
]
