"""
SuperSeg boundary detector.

Acoustic encoder: linear d_mel -> d_l, n_blocks x {dilated Conv1d, LayerNorm over
channels, ReLU, dropout}, linear d_l -> d_h giving h_t. Boundary embedder: 2 x d_e
table for e_t plus a learned start vector standing in for e_0. Boundary decoder:
unidirectional LSTM over [h_t ; e_{t-1}] with a linear head giving the logit of p_t.
The non-autoregressive variant has no embedder and feeds h_t alone.
"""
import math
from typing import Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from segkit.boundaries import boundaries_from_frames
from segkit.errors import NumericalError
from segkit.schemas.boundary import BoundarySequence, FrameLabelSequence
from segkit.schemas.features import MelFrames
from segkit.schemas.model import SuperSegConfig


class ConvBlock(nn.Module):
    def __init__(self, channels: int, kernel: int, dilation: int, dropout: float):
        super().__init__()
        self.conv = nn.Conv1d(
            channels,
            channels,
            kernel,
            dilation=dilation,
            padding=dilation * (kernel - 1) // 2,
        )
        self.norm = nn.LayerNorm(channels)
        self.dropout = dropout

    def forward(
        self,
        x: torch.Tensor,
        mask: torch.Tensor,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        y = self.conv(x.transpose(1, 2)).transpose(1, 2)
        y = torch.relu(self.norm(y))
        if self.training and self.dropout > 0:
            keep = torch.rand(y.shape, generator=generator, device=y.device, dtype=y.dtype) >= self.dropout
            y = y * keep / (1.0 - self.dropout)
        # padded frames must look like the conv's own zero padding
        return y * mask


class SuperSeg(nn.Module):
    def __init__(self, config: SuperSegConfig):
        super().__init__()
        self.config = config
        self.input_projection = nn.Linear(config.d_mel, config.d_l)
        self.blocks = nn.ModuleList(
            ConvBlock(config.d_l, config.kernel, dilation, config.dropout)
            for dilation in config.dilations
        )
        self.output_projection = nn.Linear(config.d_l, config.d_h)

        decoder_input = config.d_h
        if config.autoregressive:
            self.boundary_embedding = nn.Embedding(2, config.d_e)
            self.start_embedding = nn.Parameter(torch.zeros(config.d_e))
            decoder_input += config.d_e
        self.decoder = nn.LSTM(decoder_input, config.decoder_hidden, batch_first=True)
        self.head = nn.Linear(config.decoder_hidden, 1)

    @property
    def autoregressive(self) -> bool:
        return self.config.autoregressive

    def encode(
        self,
        mel: torch.Tensor,
        mask: Optional[torch.Tensor] = None,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """(B, T, d_mel) -> (B, T, d_h); ``mask`` is (B, T) with 1 on real frames."""
        if mask is None:
            mask = torch.ones(mel.shape[:2], dtype=mel.dtype, device=mel.device)
        frame_mask = mask.to(mel.dtype).unsqueeze(-1)

        x = self.input_projection(mel) * frame_mask
        for block in self.blocks:
            x = block(x, frame_mask, generator)
        hidden = self.output_projection(x)
        if not torch.isfinite(hidden).all():
            raise NumericalError("non-finite activations in the acoustic encoder")
        return hidden

    def previous_embeddings(self, labels: torch.Tensor) -> torch.Tensor:
        """e_{t-1} for every t: the start vector, then the labels shifted right by one."""
        batch = labels.shape[0]
        start = self.start_embedding.view(1, 1, -1).expand(batch, 1, -1)
        return torch.cat([start, self.boundary_embedding(labels[:, :-1].long())], dim=1)

    def teacher_forced_logits(self, hidden: torch.Tensor, labels: Optional[torch.Tensor]) -> torch.Tensor:
        if self.autoregressive:
            if labels is None:
                raise ValueError("the autoregressive decoder needs ground-truth labels for teacher forcing")
            decoder_input = torch.cat([hidden, self.previous_embeddings(labels)], dim=-1)
        else:
            decoder_input = hidden
        output, _ = self.decoder(decoder_input)
        return self.head(output).squeeze(-1)

    def forward(
        self,
        mel: torch.Tensor,
        labels: Optional[torch.Tensor] = None,
        mask: Optional[torch.Tensor] = None,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """Teacher-forced logits (B, T)."""
        return self.teacher_forced_logits(self.encode(mel, mask, generator), labels)

    @torch.no_grad()
    def decode(
        self,
        hidden: torch.Tensor,
        threshold: Union[float, torch.Tensor],
        forced_labels: Optional[torch.Tensor] = None,
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Greedy frame-by-frame decoding; returns (probabilities, labels), both (B, T).

        Each step feeds back the embedding of the previous decision, or of
        ``forced_labels`` when given. ``threshold`` may be a (B,) tensor.
        """
        if not self.autoregressive:
            probabilities = torch.sigmoid(self.teacher_forced_logits(hidden, None))
            return probabilities, (probabilities > threshold_column(threshold, probabilities)).long()

        batch, frames, _ = hidden.shape
        probabilities = hidden.new_empty(batch, frames)
        labels = torch.zeros(batch, frames, dtype=torch.long, device=hidden.device)
        previous = self.start_embedding.view(1, -1).expand(batch, -1)
        state = None
        for t in range(frames):
            step_input = torch.cat([hidden[:, t], previous], dim=-1).unsqueeze(1)
            output, state = self.decoder(step_input, state)
            p_t = torch.sigmoid(self.head(output[:, 0]).squeeze(-1))
            probabilities[:, t] = p_t
            labels[:, t] = (p_t > threshold_vector(threshold, p_t)).long()
            fed_back = labels[:, t] if forced_labels is None else forced_labels[:, t].long()
            previous = self.boundary_embedding(fed_back)
        return probabilities, labels


def threshold_vector(threshold: Union[float, torch.Tensor], like: torch.Tensor) -> torch.Tensor:
    if isinstance(threshold, torch.Tensor):
        return threshold.to(like.dtype).view(-1)
    return torch.full_like(like, float(threshold))


def threshold_column(threshold: Union[float, torch.Tensor], like: torch.Tensor) -> torch.Tensor:
    return threshold_vector(threshold, like[:, 0]).view(-1, 1)


def init_params(
    config: SuperSegConfig,
    seed: int = 0,
    boundary_rate: Optional[float] = None,
) -> SuperSeg:
    """
    Build a detector with deterministic initial weights.

    Linear/conv weights and biases ~ U(+-1/sqrt(fan_in)); LSTM weights ~ U(+-1/sqrt(hidden))
    with forget-gate bias 1; LayerNorm gain 1 and bias 0; embeddings ~ U(-1, 1). With
    ``boundary_rate`` the head bias starts at its logit.
    """
    model = SuperSeg(config)
    generator = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for module in model.modules():
            if isinstance(module, (nn.Linear, nn.Conv1d)):
                bound = 1.0 / math.sqrt(module.weight[0].numel())
                module.weight.uniform_(-bound, bound, generator=generator)
                module.bias.uniform_(-bound, bound, generator=generator)
            elif isinstance(module, nn.LayerNorm):
                module.weight.fill_(1.0)
                module.bias.zero_()
            elif isinstance(module, nn.Embedding):
                module.weight.uniform_(-1.0, 1.0, generator=generator)
            elif isinstance(module, nn.LSTM):
                hidden = module.hidden_size
                bound = 1.0 / math.sqrt(hidden)
                for parameter in module.parameters():
                    parameter.uniform_(-bound, bound, generator=generator)
                module.bias_ih_l0[hidden:2 * hidden].fill_(1.0)
                module.bias_hh_l0[hidden:2 * hidden].zero_()
        if config.autoregressive:
            model.start_embedding.uniform_(-1.0, 1.0, generator=generator)
        if boundary_rate is not None:
            model.head.bias.fill_(math.log(boundary_rate / (1.0 - boundary_rate)))
    return model


def count_parameters(model: nn.Module) -> int:
    return sum(parameter.numel() for parameter in model.parameters())


def _as_batch(mel: Union[MelFrames, np.ndarray, torch.Tensor], like: nn.Module) -> torch.Tensor:
    values = mel.values if isinstance(mel, MelFrames) else mel
    tensor = torch.as_tensor(np.asarray(values) if not isinstance(values, torch.Tensor) else values)
    reference = next(like.parameters())
    return tensor.to(device=reference.device, dtype=reference.dtype).unsqueeze(0)


def encode(
    model: SuperSeg,
    mel: Union[MelFrames, np.ndarray, torch.Tensor],
    training: bool = False,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Latent features H (T x d_h) of one utterance; dropout only when ``training``."""
    was_training = model.training
    model.train(training)
    try:
        return model.encode(_as_batch(mel, model), generator=generator)[0]
    finally:
        model.train(was_training)


def forward_teacher_forced(
    model: SuperSeg,
    hidden: torch.Tensor,
    labels: Union[FrameLabelSequence, torch.Tensor, None],
) -> torch.Tensor:
    """p_1..p_T of one utterance given H (T x d_h) and its ground-truth labels."""
    if isinstance(labels, FrameLabelSequence):
        labels = torch.tensor(labels.labels, dtype=torch.long, device=hidden.device)
    if labels is not None and labels.shape[0] != hidden.shape[0]:
        raise ValueError(f"labels cover {labels.shape[0]} frames but H has {hidden.shape[0]}")
    batch_labels = labels.unsqueeze(0) if labels is not None else None
    return torch.sigmoid(model.teacher_forced_logits(hidden.unsqueeze(0), batch_labels))[0]


@torch.no_grad()
def infer(model: SuperSeg, mel: Union[MelFrames, np.ndarray, torch.Tensor], threshold: float) -> BoundarySequence:
    """Thresholded greedy decoding of one utterance with dropout disabled."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    model.eval()
    hidden = model.encode(_as_batch(mel, model))
    _, labels = model.decode(hidden, threshold)
    frames = torch.nonzero(labels[0]).view(-1).tolist()
    return boundaries_from_frames(frames, hidden.shape[1])
