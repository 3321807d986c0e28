import json

import numpy as np
import torch

from mnist_trainer.formats import (
    analytic_param_count,
    file_param_count,
    format_classify,
    format_forward,
    layers_from_torch,
    read_model_file,
    write_dataset_file,
    write_model_file,
)
from mnist_trainer.train import build_mlp


def random_doc(rng_seed=0, input_dim=12, hidden=(6, 5), classes=4):
    torch.manual_seed(rng_seed)
    model = build_mlp(input_dim, hidden, classes)
    return model, {"input_dim": input_dim, "layers": layers_from_torch(model)}


class TestModelFile:
    def test_schema(self, tmp_path):
        _, doc = random_doc()
        path = tmp_path / "model.json"
        write_model_file(doc["input_dim"], doc["layers"], path)
        loaded = read_model_file(path)
        assert loaded["input_dim"] == 12
        activations = [layer["activation"] for layer in loaded["layers"]]
        assert activations == ["relu", "relu", "linear"]
        assert len(loaded["layers"][0]["weights"]) == 6
        assert len(loaded["layers"][0]["weights"][0]) == 12

    def test_no_nan_tokens(self, tmp_path):
        _, doc = random_doc()
        path = tmp_path / "model.json"
        write_model_file(doc["input_dim"], doc["layers"], path)
        text = path.read_text()
        assert "NaN" not in text and "Infinity" not in text
        json.loads(text)  # strictly valid JSON

    def test_param_count_helpers(self):
        assert analytic_param_count(784, (64, 32, 64), 10) == 55_082
        assert analytic_param_count(784, (84, 42, 64, 42, 84), 10) == 79_454
        _, doc = random_doc()
        assert file_param_count(doc) == analytic_param_count(12, (6, 5), 4)


class TestFormatSemantics:
    def test_forward_matches_torch(self):
        model, doc = random_doc(rng_seed=3)
        model.eval()
        rng = np.random.default_rng(1)
        with torch.no_grad():
            for _ in range(50):
                x = rng.uniform(0, 1, 12)
                mine = format_forward(doc, x)
                theirs = model(torch.from_numpy(x).float().unsqueeze(0))[0].numpy()
                assert np.max(np.abs(mine - theirs)) <= 1e-5

    def test_classify_tie_breaks_low_index(self):
        doc = {
            "input_dim": 1,
            "layers": [
                {"weights": [[0.0]], "bias": [0.0], "activation": "relu"},
                {"weights": [[0.0], [0.0]], "bias": [0.7, 0.7], "activation": "linear"},
            ],
        }
        assert format_classify(doc, np.array([0.3])) == 0


class TestDatasetFile:
    def test_records_written_one_per_line(self, tmp_path):
        path = tmp_path / "seeds.jsonl"
        write_dataset_file(
            [("a", np.array([0.0, 1.0]), 2), ("b", np.array([0.25, 0.5]), 0)], path
        )
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first == {"id": "a", "label": 2, "x": [0.0, 1.0]}

    def test_empty_export(self, tmp_path):
        path = tmp_path / "seeds.jsonl"
        write_dataset_file([], path)
        assert path.read_text() == ""
