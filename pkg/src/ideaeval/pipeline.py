"""Staged evaluation pipeline over a run directory.

Stages communicate only through files under the run directory, so each can
be re-invoked independently; a completed stage is a no-op on rerun. All
artifacts use canonical JSON and carry no timestamps, which makes a rerun
with a warm cache byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import corpus as corpus_mod
from .config import RunConfig, build_chat_provider, build_embedding_provider
from .errors import IdeaEvalError, PipelineError, ValidationError
from .generation import TEMPLATES, IdeaSet, generate_ideas
from .ioutil import canonical_dumps, read_json, sha256_hex, write_json
from .matcher import MatcherBackend, match_embedding, match_llm_judge
from .metrics import (
    PaperAlignment,
    domain_iascore,
    paper_distinctness,
    score_by_length,
)

PACKAGE_VERSION = "0.1.0"

STAGES = ("ingest", "strip", "generate", "match", "score", "report")

# Originally reported evaluation results, kept as report-footer context.
# They depended on a private annotated corpus and live commercial models and
# are not reproducible targets for this toolkit.
REFERENCE_BASELINES = {
    "description": (
        "Originally reported evaluation results, for context only; "
        "not reproducible offline."
    ),
    "matcher_accuracy_pct": {"llm_judge": 91.8, "bertscore": 75.4, "nli_entailment": 65.5},
    "annotator_agreement_kappa": 0.83,
    "human_eval": {
        "claude": {
            "novelty_pct": {
                "not novel": 14.78,
                "generic": 16.52,
                "moderately novel": 41.73,
                "very novel": 20.86,
                "extremely novel": 16.52,
            },
            "relevant_pct": 76.67,
            "feasible_pct": 83.34,
        },
        "gpt-4": {
            "novelty_pct": {
                "not novel": 7.83,
                "generic": 13.91,
                "moderately novel": 42.61,
                "very novel": 28.70,
                "extremely novel": 6.96,
            },
            "relevant_pct": 93.34,
            "feasible_pct": 96.64,
        },
    },
    "generation_settings": {"max_tokens": 512, "temperature": 0.0},
}


@dataclass
class RunPaths:
    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"

    @property
    def state(self) -> Path:
        return self.root / "state.json"

    @property
    def corpus_file(self) -> Path:
        return self.root / "corpus.json"

    @property
    def stripped_dir(self) -> Path:
        return self.root / "stripped"

    @property
    def ideas_dir(self) -> Path:
        return self.root / "ideas"

    @property
    def scores_dir(self) -> Path:
        return self.root / "scores"

    @property
    def metrics_file(self) -> Path:
        return self.root / "metrics.json"

    @property
    def report_file(self) -> Path:
        return self.root / "report.json"

    @property
    def report_csv(self) -> Path:
        return self.root / "report.csv"

    @property
    def humaneval_dir(self) -> Path:
        return self.root / "humaneval"


class PipelineRun:
    def __init__(self, config: RunConfig, offline: bool = False):
        config.validate(offline=offline)
        self.config = config
        self.offline = offline
        self.paths = RunPaths(Path(config.output_dir))
        self._chat = None
        self._embedder = None

    # providers are built on first use so stages that need neither (strip,
    # score over cached judgments) never touch credentials
    @property
    def chat(self):
        if self._chat is None:
            self._chat = build_chat_provider(self.config, offline=self.offline)
        return self._chat

    @property
    def embedder(self):
        if self._embedder is None:
            self._embedder = build_embedding_provider(self.config, offline=self.offline)
        return self._embedder

    # -- state ------------------------------------------------------------

    def _load_state(self) -> dict:
        if self.paths.state.exists():
            return read_json(self.paths.state)
        return {"stages": {}}

    def _mark_done(self, stage: str) -> None:
        state = self._load_state()
        state["stages"][stage] = "done"
        write_json(self.paths.state, state)

    def stage_done(self, stage: str) -> bool:
        return self._load_state()["stages"].get(stage) == "done"

    # -- stages -----------------------------------------------------------

    def ingest(self) -> int:
        """Load and validate the corpus; snapshot it plus the run manifest."""
        papers = corpus_mod.load_corpus(self.config.corpus)
        if not papers:
            raise ValidationError(f"corpus at {self.config.corpus} is empty")
        digest = corpus_mod.corpus_digest(papers)
        manifest = {
            "version": PACKAGE_VERSION,
            "config": self.config.to_dict(),
            "corpus_digest": digest,
            "offline": self.offline,
            "cache": "warm" if self.config.cache_dir else "none",
        }
        # guard runs even when the stage is already done: a run directory
        # must never silently serve artifacts from a different configuration
        # or a corpus that changed underneath it
        if self.paths.manifest.exists():
            existing = read_json(self.paths.manifest)
            if canonical_dumps(existing) != canonical_dumps(manifest):
                raise PipelineError(
                    "ingest",
                    f"run directory {self.paths.root} belongs to a different configuration",
                )
        if self.stage_done("ingest"):
            return len(papers)
        self.paths.root.mkdir(parents=True, exist_ok=True)
        write_json(self.paths.manifest, manifest)
        write_json(
            self.paths.corpus_file,
            {
                "schema": corpus_mod.SCHEMA_VERSION,
                "digest": digest,
                "papers": [corpus_mod.paper_to_dict(p) for p in papers],
            },
        )
        self._mark_done("ingest")
        return len(papers)

    def _papers(self) -> list:
        data = read_json(self.paths.corpus_file)
        return [corpus_mod.paper_from_dict(d) for d in data["papers"]]

    def strip(self) -> int:
        if self.stage_done("strip"):
            return len(list(self.paths.stripped_dir.glob("*.json")))
        papers = self._papers()
        self.paths.stripped_dir.mkdir(parents=True, exist_ok=True)
        for paper in papers:
            stripped = corpus_mod.strip_fris(paper)
            write_json(
                self.paths.stripped_dir / f"{paper.id}.json",
                corpus_mod.stripped_to_dict(stripped),
            )
        self._mark_done("strip")
        return len(papers)

    def _stripped(self) -> list:
        files = sorted(self.paths.stripped_dir.glob("*.json"))
        if not files:
            raise PipelineError("generate", "no stripped papers; run the strip stage first")
        return [corpus_mod.stripped_from_dict(read_json(f)) for f in files]

    def generate(self) -> int:
        if self.stage_done("generate"):
            return sum(1 for _ in self.paths.ideas_dir.glob("*/*.json"))
        stripped = self._stripped()
        template = TEMPLATES[self.config.template]
        written = 0
        for model in self.config.models:
            model_dir = self.paths.ideas_dir / model
            model_dir.mkdir(parents=True, exist_ok=True)
            gen_config = self.config.generation_config(model)
            for paper in stripped:
                try:
                    ideas = generate_ideas(self.chat, paper, template, gen_config)
                except IdeaEvalError as exc:
                    if written:
                        raise PipelineError(
                            "generate",
                            f"failed on paper {paper.paper_id} model {model} after "
                            f"{written} idea sets; partial artifacts retained: {exc}",
                        ) from exc
                    raise
                write_json(model_dir / f"{paper.paper_id}.json", ideas.to_dict())
                written += 1
        self._mark_done("generate")
        return written

    def _idea_sets(self) -> dict[tuple[str, str], IdeaSet]:
        out = {}
        for model in self.config.models:
            for path in sorted((self.paths.ideas_dir / model).glob("*.json")):
                ideas = IdeaSet.from_dict(read_json(path))
                out[(model, ideas.paper_id)] = ideas
        if not out:
            raise PipelineError("match", "no generated ideas; run the generate stage first")
        return out

    def match(self) -> int:
        if self.stage_done("match"):
            return sum(1 for _ in self.paths.scores_dir.glob("*/*.json"))
        stripped = {s.paper_id: s for s in self._stripped()}
        idea_sets = self._idea_sets()
        backend = self.config.matcher.backend
        judge_config = self.config.generation_config(self.config.judge_model)
        written = 0
        for (model, paper_id), ideas in sorted(idea_sets.items()):
            out_dir = self.paths.scores_dir / model
            out_dir.mkdir(parents=True, exist_ok=True)
            ap_fri = stripped[paper_id].ap_fri
            if not ap_fri:
                payload = {
                    "backend": backend.value,
                    "skipped": "paper has no author future-work groups",
                    "judgments": [],
                }
                write_json(out_dir / f"{paper_id}.json", payload)
                continue
            judgments = []
            try:
                for idea in ideas.ideas:
                    if backend == MatcherBackend.EmbeddingThreshold:
                        judgment = match_embedding(
                            self.embedder, ap_fri, idea,
                            threshold=self.config.matcher.embed_threshold,
                        )
                    else:
                        judgment = match_llm_judge(self.chat, ap_fri, idea, judge_config)
                    judgments.append(judgment.to_dict())
            except IdeaEvalError as exc:
                if written:
                    raise PipelineError(
                        "match",
                        f"failed on paper {paper_id} model {model} after {written} "
                        f"papers; partial artifacts retained: {exc}",
                    ) from exc
                raise
            write_json(
                out_dir / f"{paper_id}.json",
                {"backend": backend.value, "skipped": None, "judgments": judgments},
            )
            written += 1
        self._mark_done("match")
        return written

    def score(self) -> dict:
        if self.stage_done("score"):
            return read_json(self.paths.metrics_file)
        papers = {p.id: p for p in self._papers()}
        stripped = {s.paper_id: s for s in self._stripped()}
        idea_sets = self._idea_sets()

        domains: dict[str, dict] = {}
        by_domain: dict[str, list[str]] = {}
        for paper_id, paper in sorted(papers.items()):
            by_domain.setdefault(paper.domain.value, []).append(paper_id)

        for domain, paper_ids in sorted(by_domain.items()):
            domain_block: dict = {"models": {}, "human_distinctness": None}
            human_values = []
            human_skipped = []
            for paper_id in paper_ids:
                groups = stripped[paper_id].ap_fri
                if len(groups) >= 2:
                    vectors = [
                        v.as_array()
                        for v in self.embedder.embed([g.text for g in groups])
                    ]
                    human_values.append(paper_distinctness(vectors))
                else:
                    human_skipped.append(paper_id)
            if human_values:
                domain_block["human_distinctness"] = {
                    "value": float(sum(human_values) / len(human_values)),
                    "paper_count": len(human_values),
                    "skipped_papers": human_skipped,
                }

            for model in self.config.models:
                alignments = []
                invalid = 0
                skipped_papers = []
                all_ideas: list[str] = []
                all_scores: list[float] = []
                dist_values = []
                dist_skipped = []
                for paper_id in paper_ids:
                    ideas = idea_sets.get((model, paper_id))
                    if ideas is None:
                        skipped_papers.append(paper_id)
                        continue
                    score_file = self.paths.scores_dir / model / f"{paper_id}.json"
                    scores_doc = read_json(score_file)
                    if scores_doc["skipped"]:
                        skipped_papers.append(paper_id)
                    else:
                        judgments = scores_doc["judgments"]
                        invalid += sum(1 for j in judgments if not j["valid"])
                        scores = [j["score"] for j in judgments]
                        alignments.append(
                            PaperAlignment(
                                paper_id=paper_id,
                                scores=tuple(scores),
                                author_idea_count=len(stripped[paper_id].ap_fri),
                            )
                        )
                        all_ideas.extend(i.text for i in ideas.ideas)
                        all_scores.extend(scores)
                    if len(ideas.ideas) >= 2:
                        vectors = [
                            v.as_array() for v in self.embedder.embed(ideas.texts())
                        ]
                        dist_values.append(paper_distinctness(vectors))
                    else:
                        dist_skipped.append(paper_id)

                model_block: dict = {
                    "iascore": None,
                    "distinctness": None,
                    "length_bins": {},
                    "invalid_judgments": invalid,
                    "skipped_papers": skipped_papers,
                }
                if alignments:
                    result = domain_iascore(alignments)
                    model_block["iascore"] = {
                        "value": result.value,
                        "value_raw": result.value_raw,
                        "paper_count": result.paper_count,
                        "per_paper": {
                            a.paper_id: {"raw": a.avg_score_raw, "clamped": a.avg_score}
                            for a in result.per_paper
                        },
                    }
                if dist_values:
                    model_block["distinctness"] = {
                        "value": float(sum(dist_values) / len(dist_values)),
                        "paper_count": len(dist_values),
                        "skipped_papers": dist_skipped,
                    }
                if all_ideas:
                    model_block["length_bins"] = score_by_length(all_ideas, all_scores)
                domain_block["models"][model] = model_block
            domains[domain] = domain_block

        metrics = {
            "embedder_id": self.embedder.embedder_id,
            "matcher_backend": self.config.matcher.backend.value,
            "domains": domains,
        }
        write_json(self.paths.metrics_file, metrics)
        self._mark_done("score")
        return metrics

    def report(self) -> dict:
        if self.stage_done("report"):
            return read_json(self.paths.report_file)
        manifest = read_json(self.paths.manifest)
        metrics = read_json(self.paths.metrics_file)
        report = {
            "run_id": self.paths.root.name,
            "version": manifest["version"],
            "corpus_digest": manifest["corpus_digest"],
            "config": manifest["config"],
            "metrics": metrics,
            "reference_baselines": REFERENCE_BASELINES,
        }
        write_json(self.paths.report_file, report)
        self.paths.report_csv.write_text(_report_csv(metrics), encoding="utf-8")
        self._mark_done("report")
        return report

    def run_all(self) -> dict:
        self.ingest()
        self.strip()
        self.generate()
        self.match()
        self.score()
        return self.report()

    def report_digest(self) -> str:
        return sha256_hex(self.paths.report_file.read_text(encoding="utf-8"))


def _report_csv(metrics: dict) -> str:
    """Flat domain,model,metric,value rows for plotting tools."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["domain", "model", "metric", "value"])
    for domain in sorted(metrics["domains"]):
        block = metrics["domains"][domain]
        human = block.get("human_distinctness")
        if human:
            writer.writerow([domain, "human", "distinctness", f"{human['value']:.10g}"])
        for model in sorted(block["models"]):
            m = block["models"][model]
            if m["iascore"]:
                writer.writerow([domain, model, "iascore", f"{m['iascore']['value']:.10g}"])
                writer.writerow(
                    [domain, model, "iascore_raw", f"{m['iascore']['value_raw']:.10g}"]
                )
            if m["distinctness"]:
                writer.writerow(
                    [domain, model, "distinctness", f"{m['distinctness']['value']:.10g}"]
                )
            for bin_label, stats in m["length_bins"].items():
                writer.writerow(
                    [domain, model, f"mean_score{bin_label}", f"{stats['mean_score']:.10g}"]
                )
    return buf.getvalue()
