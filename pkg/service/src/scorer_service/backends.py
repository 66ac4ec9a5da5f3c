"""Model backends.

A backend sees only formatted prompts (plus raw premise/hypothesis pairs for
entailment) and returns scores or generated text. The stub backend is
deterministic and dependency-free so contract tests run anywhere; the
transformers backend is opt-in and loads one seq2seq or classification model
per capability.
"""

from __future__ import annotations

from scorer_service import lexical, prompts
from scorer_service.config import ServiceConfig


class BackendError(RuntimeError):
    pass


class Backend:
    name = "base"

    def entail(self, pairs: list[tuple[str, str]]) -> list[float]:
        raise NotImplementedError

    def answerable(self, answerable_prompts: list[str]) -> list[tuple[str, float]]:
        """Returns ("Yes"|"No", score) per prompt."""
        raise NotImplementedError

    def generate(self, generate_prompts: list[str], counts: list[int]) -> list[list[str]]:
        raise NotImplementedError

    def rerank(self, query: str, passages: list[str]) -> list[float]:
        raise NotImplementedError


class StubBackend(Backend):
    """Deterministic lexical backend.

    Parses each prompt back into its fields and scores by token overlap,
    thresholding answerability at ``yes_threshold``. Mirrors the plancite
    lexical oracle, which is what the shared contract fixtures check.
    """

    name = "stub"

    def __init__(self, yes_threshold: float = 0.5):
        self.yes_threshold = yes_threshold

    def entail(self, pairs):
        return [lexical.entail_score(premise, hypothesis) for premise, hypothesis in pairs]

    def answerable(self, answerable_prompts):
        out = []
        for prompt in answerable_prompts:
            question, context = prompts.parse_answerable_prompt(prompt)
            score = lexical.answerable_score(question, context)
            out.append(("Yes" if score >= self.yes_threshold else "No", score))
        return out

    def generate(self, generate_prompts, counts):
        out = []
        for prompt, count in zip(generate_prompts, counts):
            passage, sentence = prompts.parse_generate_prompt(prompt)
            source = sentence if sentence is not None else passage
            out.append(lexical.template_questions(source, count))
        return out

    def rerank(self, query, passages):
        return [lexical.entail_score(passage, query) for passage in passages]


class TransformersBackend(Backend):
    """Optional neural backend; requires the ``models`` extra and local or
    downloadable weights.

    Seq2seq models handle generation and answerability (the answerability
    model is expected to emit "Yes"/"No"); sequence-classification models
    handle entailment (probability of the entailment label) and reranking
    (positive-class probability on "Query: ... Document: ...").
    """

    name = "transformers"

    def __init__(self, config: ServiceConfig):
        if not all(
            [config.entail_model, config.answerable_model,
             config.generate_model, config.rerank_model]
        ):
            raise BackendError("transformers backend needs a model id per capability")
        try:
            import torch  # noqa: F401
            from transformers import (
                AutoModelForSeq2SeqLM,
                AutoModelForSequenceClassification,
                AutoTokenizer,
            )
        except ImportError as exc:
            raise BackendError(
                "transformers backend needs the 'models' extra installed"
            ) from exc
        self._torch = __import__("torch")
        self.device = config.device
        self.max_batch_size = config.max_batch_size

        def seq2seq(name):
            model = AutoModelForSeq2SeqLM.from_pretrained(name).to(self.device).eval()
            return AutoTokenizer.from_pretrained(name), model

        def classifier(name):
            model = (
                AutoModelForSequenceClassification.from_pretrained(name)
                .to(self.device)
                .eval()
            )
            return AutoTokenizer.from_pretrained(name), model

        self.entail_tok, self.entail_model = classifier(config.entail_model)
        self.ans_tok, self.ans_model = seq2seq(config.answerable_model)
        self.gen_tok, self.gen_model = seq2seq(config.generate_model)
        self.rank_tok, self.rank_model = classifier(config.rerank_model)

    def _entail_label_index(self) -> int:
        labels = self.entail_model.config.id2label
        for i, label in labels.items():
            if "entail" in str(label).lower():
                return int(i)
        return 0

    def entail(self, pairs):
        torch = self._torch
        scores = []
        entail_index = self._entail_label_index()
        for start in range(0, len(pairs), self.max_batch_size):
            chunk = pairs[start : start + self.max_batch_size]
            inputs = self.entail_tok(
                [p for p, _ in chunk], [h for _, h in chunk],
                padding=True, truncation=True, return_tensors="pt",
            ).to(self.device)
            with torch.inference_mode():
                probs = self.entail_model(**inputs).logits.softmax(-1)
            scores.extend(probs[:, entail_index].tolist())
        return scores

    def answerable(self, answerable_prompts):
        torch = self._torch
        out = []
        yes_id = self.ans_tok("Yes", add_special_tokens=False).input_ids[0]
        no_id = self.ans_tok("No", add_special_tokens=False).input_ids[0]
        for start in range(0, len(answerable_prompts), self.max_batch_size):
            chunk = answerable_prompts[start : start + self.max_batch_size]
            inputs = self.ans_tok(
                chunk, padding=True, truncation=True, return_tensors="pt"
            ).to(self.device)
            with torch.inference_mode():
                generated = self.ans_model.generate(
                    **inputs, max_new_tokens=2, output_scores=True,
                    return_dict_in_generate=True,
                )
            first_logits = generated.scores[0]
            for row in first_logits:
                pair = torch.stack([row[yes_id], row[no_id]]).softmax(-1)
                yes_prob = float(pair[0])
                out.append(("Yes" if yes_prob >= 0.5 else "No", yes_prob))
        return out

    def generate(self, generate_prompts, counts):
        torch = self._torch
        out = []
        for prompt, count in zip(generate_prompts, counts):
            if count <= 0:
                out.append([])
                continue
            inputs = self.gen_tok(
                prompt, truncation=True, return_tensors="pt"
            ).to(self.device)
            with torch.inference_mode():
                sequences = self.gen_model.generate(
                    **inputs, num_beams=max(count, 2), num_return_sequences=count,
                    max_new_tokens=64,
                )
            out.append(
                [self.gen_tok.decode(s, skip_special_tokens=True) for s in sequences]
            )
        return out

    def rerank(self, query, passages):
        torch = self._torch
        scores = []
        for start in range(0, len(passages), self.max_batch_size):
            chunk = passages[start : start + self.max_batch_size]
            inputs = self.rank_tok(
                [f"Query: {query} Document: {p}" for p in chunk],
                padding=True, truncation=True, return_tensors="pt",
            ).to(self.device)
            with torch.inference_mode():
                probs = self.rank_model(**inputs).logits.softmax(-1)
            scores.extend(probs[:, -1].tolist())
        return scores


def make_backend(config: ServiceConfig) -> Backend:
    if config.backend == "stub":
        return StubBackend(yes_threshold=config.yes_threshold)
    if config.backend == "transformers":
        return TransformersBackend(config)
    raise BackendError(f"unknown backend {config.backend!r}")
