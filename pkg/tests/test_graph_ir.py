import threading
from typing import Any, Dict, List

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import (
    InvalidModelError,
    MissingFeedError,
    NodeExecutionError,
    OperatorConflictError,
    RegistryFrozenError,
    ShapeMismatchError,
    TopologyError,
    UnknownOperatorError,
)
from gnn_ops import GcnOpKernel, SageMeanOpKernel
from graph_ir import (
    DuplicateOutput,
    EmptyOpType,
    ExecutionMode,
    FunctionKernel,
    GraphNode,
    InferenceSession,
    InvalidAttribute,
    ModelGraph,
    NonFloat32Initializer,
    NotTopologicallyOrdered,
    OperatorRegistry,
    OpSchema,
    UndefinedGraphOutput,
    UndefinedInput,
    ValueInfo,
    create_registry,
    execute,
    register_op,
    validate,
)
from graph_ir.base import ATTR_INTS, ATTR_STRING, AttributeSpec
from tensor_core import FLOAT32, FLOAT64, Tensor


def identity_graph(batched: bool = True) -> ModelGraph:
    return ModelGraph(inputs=[ValueInfo("x", (2, 3), batched=batched)], outputs=["x"])


def relu_chain() -> ModelGraph:
    return ModelGraph(
        inputs=[ValueInfo("x", (2, 2))],
        outputs=["y"],
        nodes=[
            GraphNode("MatMul", ["x", "w"], ["z"], name="mm"),
            GraphNode("Relu", ["z"], ["y"], name="act"),
        ],
        initializers={"w": Tensor([[1.0, -1.0], [0.5, 2.0]], FLOAT32)},
    )


def dfs_has_cycle(model: ModelGraph) -> bool:
    """独立的 DFS：按值依赖建立节点图，检查是否有环"""
    producer = {out: i for i, node in enumerate(model.nodes) for out in node.outputs}
    edges = {i: [producer[name] for name in node.inputs if name in producer]
             for i, node in enumerate(model.nodes)}
    state: Dict[int, int] = {}

    def visit(i: int) -> bool:
        state[i] = 1
        for j in edges[i]:
            if state.get(j) == 1 or (j not in state and visit(j)):
                return True
        state[i] = 2
        return False

    return any(i not in state and visit(i) for i in edges)


@pytest.mark.unit
class TestValidate:
    def test_well_formed_graph(self):
        assert validate(relu_chain()) == []
        assert relu_chain().validate() == []

    def test_identity_graph(self):
        assert validate(identity_graph()) == []

    def test_undefined_input(self):
        model = relu_chain()
        model.nodes[1].inputs = ["ghost"]
        assert validate(model) == [UndefinedInput("ghost", "act")]

    def test_cycle_detected_after_renaming(self):
        model = relu_chain()
        # mm 改为消费 act 的输出，形成环
        model.nodes[0].inputs = ["y", "w"]
        assert dfs_has_cycle(model)
        violations = validate(model)
        assert NotTopologicallyOrdered("y", "mm") in violations

    def test_self_loop(self):
        model = relu_chain()
        model.nodes[1].inputs = ["y"]
        assert dfs_has_cycle(model)
        assert NotTopologicallyOrdered("y", "act") in validate(model)

    def test_acyclic_graph_agrees_with_dfs(self):
        assert not dfs_has_cycle(relu_chain())

    def test_duplicate_output(self):
        model = relu_chain()
        model.nodes[1].outputs = ["z"]
        model.outputs = ["z"]
        assert DuplicateOutput("z", "act") in validate(model)

    def test_undefined_graph_output(self):
        model = relu_chain()
        model.outputs = ["nowhere"]
        assert validate(model) == [UndefinedGraphOutput("nowhere")]

    def test_empty_op_type(self):
        model = relu_chain()
        model.nodes[1].op_type = ""
        assert EmptyOpType("1", "act") in validate(model)

    def test_float64_initializer(self):
        model = relu_chain()
        model.initializers["w"] = Tensor(np.eye(2), FLOAT64)
        assert validate(model) == [NonFloat32Initializer("w")]

    def test_unsupported_attribute_value(self):
        model = relu_chain()
        model.nodes[1].attributes = {"flag": True, "scale": [1.5]}
        violations = validate(model)
        assert InvalidAttribute("flag", "act") in violations
        assert InvalidAttribute("scale", "act") in violations

    def test_violation_names_node(self):
        model = relu_chain()
        model.nodes[1].inputs = ["ghost"]
        assert str(validate(model)[0]) == "UndefinedInput('ghost') @ act"


@pytest.mark.unit
class TestOperatorRegistry:
    def test_builtins_present(self):
        registry = OperatorRegistry()
        for op_type in ["MatMul", "Add", "AddBias", "Relu", "Concat", "Reshape", "RowMean", "Flatten"]:
            assert op_type in registry
        assert "MyGcnOp" not in registry

    def test_register_custom_op(self):
        registry = OperatorRegistry()
        assert register_op(registry, GcnOpKernel()) is registry
        assert registry.lookup("MyGcnOp").op_type == "MyGcnOp"

    def test_duplicate_registration(self):
        registry = OperatorRegistry()
        matmul = FunctionKernel(OpSchema("MatMul", ("A", "B")), lambda inputs, attrs: inputs)
        with pytest.raises(OperatorConflictError):
            register_op(registry, matmul)

    def test_lookup_absent(self):
        with pytest.raises(UnknownOperatorError) as exc_info:
            OperatorRegistry().lookup("SageMeanOp")
        assert exc_info.value.op_types == ["SageMeanOp"]

    def test_frozen_registry_rejects_registration(self):
        registry = OperatorRegistry().freeze()
        with pytest.raises(RegistryFrozenError):
            registry.register_op(SageMeanOpKernel())

    def test_create_registry(self):
        assert {"MyGcnOp", "SageMeanOp"} <= set(create_registry().op_types())
        assert "MyGcnOp" not in create_registry(with_gnn_ops=False)

    def test_missing(self):
        registry = create_registry(with_gnn_ops=False)
        assert registry.missing(["Relu", "SageMeanOp", "MyGcnOp", "MyGcnOp"]) == ["MyGcnOp", "SageMeanOp"]


@pytest.mark.unit
class TestOpSchema:
    schema = OpSchema(
        "Custom",
        inputs=("X", "W"),
        attributes=(
            AttributeSpec("activation", ATTR_STRING, choices=("relu", "none")),
            AttributeSpec("lists", ATTR_INTS, required=True),
        ),
    )

    def test_valid_node(self):
        assert self.schema.check_node(["a", "b"], ["c"], {"activation": "relu", "lists": [1, 2]}) == []

    def test_problems_reported(self):
        problems = self.schema.check_node(["a"], ["c", "d"], {"activation": "tanh", "extra": 1})
        assert len(problems) == 5

    def test_wrong_attribute_kind(self):
        assert self.schema.check_node(["a", "b"], ["c"], {"lists": "1,2"})


def custom_op_graph() -> ModelGraph:
    a_hat = np.full((2, 2), 0.5)
    return ModelGraph(
        inputs=[ValueInfo("X", (2, 2), batched=True)],
        outputs=["Y"],
        nodes=[GraphNode("MyGcnOp", ["X", "A_hat", "W"], ["Y"], {"activation": "relu"}, "gcn")],
        initializers={"A_hat": Tensor(a_hat, FLOAT32), "W": Tensor(np.eye(2), FLOAT32)},
    )


@pytest.mark.integration
class TestCustomOperatorMechanism:
    def test_unknown_then_registered(self):
        registry = create_registry(with_gnn_ops=False)
        model = custom_op_graph()
        feeds = {"X": Tensor([[1.0, 0.0], [3.0, 2.0]], FLOAT32)}

        with pytest.raises(UnknownOperatorError) as exc_info:
            execute(model, registry, feeds)
        assert exc_info.value.op_types == ["MyGcnOp"]
        assert "MyGcnOp" in str(exc_info.value)

        register_op(registry, GcnOpKernel())
        result = execute(model, registry, feeds)["Y"]
        assert result.tolist() == [[[2.0, 1.0], [2.0, 1.0]]]

    def test_all_missing_ops_listed(self):
        model = custom_op_graph()
        model.nodes.append(GraphNode("SageMeanOp", ["Y", "W"], ["Z"], {"neighbor_lists": [2, 0, 1, 2, 1, 0]}, "sage"))
        model.outputs = ["Z"]
        with pytest.raises(UnknownOperatorError) as exc_info:
            InferenceSession(model, create_registry(with_gnn_ops=False))
        assert exc_info.value.op_types == ["MyGcnOp", "SageMeanOp"]

    def test_session_freezes_registry(self):
        registry = create_registry()
        InferenceSession(custom_op_graph(), registry)
        assert registry.frozen

    def test_schema_violation_rejected_at_session_start(self):
        model = custom_op_graph()
        model.nodes[0].attributes = {"activation": "sigmoid"}
        with pytest.raises(InvalidModelError):
            InferenceSession(model, create_registry())

    def test_invalid_graph_rejected(self):
        model = custom_op_graph()
        model.nodes[0].inputs[0] = "ghost"
        with pytest.raises(InvalidModelError) as exc_info:
            InferenceSession(model, create_registry())
        assert exc_info.value.violations == [UndefinedInput("ghost", "gcn")]


class CountingKernel(FunctionKernel):
    """记录调用顺序的内核"""


def instrumented_registry(log: List[str]) -> OperatorRegistry:
    registry = OperatorRegistry(include_builtins=False)

    def make(op_type: str, fn):
        def evaluate(inputs: List[Tensor], attributes: Dict[str, Any]) -> List[Tensor]:
            log.append(attributes["tag"])
            return fn(inputs)
        return CountingKernel(
            OpSchema(op_type, ("A", "B"), min_inputs=1, max_inputs=2,
                     attributes=(AttributeSpec("tag", ATTR_STRING),)),
            evaluate,
        )

    registry.register_op(make("Double", lambda ins: [Tensor.wrap(ins[0].numpy() * 2)]))
    registry.register_op(make("Sum", lambda ins: [Tensor.wrap(ins[0].numpy() + ins[1].numpy())]))
    return registry


@pytest.mark.unit
class TestExecutor:
    def test_identity_graph_both_modes(self, rng):
        x = Tensor(rng.normal(size=(4, 2, 3)), FLOAT32)
        for mode in ExecutionMode:
            assert execute(identity_graph(), create_registry(), {"x": x}, mode)["x"] == x

    def test_unbatched_feed_is_batch_of_one(self):
        out = execute(custom_op_graph(), create_registry(), {"X": Tensor([[1.0, 0.0], [3.0, 2.0]])})["Y"]
        assert out.shape == (1, 2, 2)
        assert out.dtype == FLOAT32

    def test_missing_feed(self):
        with pytest.raises(MissingFeedError):
            execute(relu_chain(), create_registry(), {})

    def test_wrong_feed_shape(self):
        with pytest.raises(ShapeMismatchError):
            execute(relu_chain(), create_registry(), {"x": Tensor(np.ones((3, 2)))})

    def test_shape_error_names_node(self):
        model = custom_op_graph()
        model.initializers["W"] = Tensor(np.eye(3), FLOAT32)
        with pytest.raises(NodeExecutionError) as exc_info:
            execute(model, create_registry(), {"X": Tensor(np.ones((2, 2)))})
        assert exc_info.value.node_name == "gcn"
        assert exc_info.value.op_type == "MyGcnOp"
        assert isinstance(exc_info.value.cause, ShapeMismatchError)

    @pytest.mark.parametrize("encoded", [[2, 0, 1, 2, -1, 0], [2, 0, 1, 2, 5, 0]])
    def test_neighbor_index_out_of_range(self, encoded):
        model = ModelGraph(
            inputs=[ValueInfo("X", (2, 2))],
            outputs=["Z"],
            nodes=[GraphNode("SageMeanOp", ["X", "W"], ["Z"], {"neighbor_lists": encoded}, "sage")],
            initializers={"W": Tensor(np.vstack([np.eye(2), np.eye(2)]), FLOAT32)},
        )
        assert validate(model) == []
        with pytest.raises(NodeExecutionError) as exc_info:
            execute(model, create_registry(), {"X": Tensor([[1.0, 3.0], [3.0, 5.0]])})
        assert exc_info.value.node_name == "sage"
        assert isinstance(exc_info.value.cause, TopologyError)

    def test_relu_chain_values(self):
        out = execute(relu_chain(), create_registry(), {"x": Tensor([[1.0, 2.0], [-1.0, 0.0]])})["y"]
        assert_allclose(out.numpy(), [[2.0, 3.0], [0.0, 1.0]])

    def test_nodes_run_in_order_after_inputs(self):
        log: List[str] = []
        model = ModelGraph(
            inputs=[ValueInfo("x", (1, 2))],
            outputs=["d"],
            nodes=[
                GraphNode("Double", ["x"], ["a"], {"tag": "n0"}),
                GraphNode("Double", ["a"], ["b"], {"tag": "n1"}),
                GraphNode("Sum", ["a", "b"], ["c"], {"tag": "n2"}),
                GraphNode("Sum", ["c", "x"], ["d"], {"tag": "n3"}),
            ],
        )
        out = execute(model, instrumented_registry(log), {"x": Tensor([[1.0, 2.0]], FLOAT32)})["d"]
        assert log == ["n0", "n1", "n2", "n3"]
        # a = 2x, b = 4x, c = 6x, d = 7x
        assert out.tolist() == [[7.0, 14.0]]

    def test_serialized_runs_graph_per_sample(self):
        log: List[str] = []
        model = ModelGraph(
            inputs=[ValueInfo("x", (1, 2), batched=True)],
            outputs=["a"],
            nodes=[GraphNode("Double", ["x"], ["a"], {"tag": "n0"})],
        )
        x = Tensor(np.arange(6.0).reshape(3, 1, 2), FLOAT32)
        out = execute(model, instrumented_registry(log), {"x": x}, ExecutionMode.SERIALIZED)["a"]
        assert log == ["n0", "n0", "n0"]
        assert out.tolist() == (np.arange(6.0).reshape(3, 1, 2) * 2).tolist()

    def test_execution_is_deterministic(self, rng):
        registry = create_registry()
        session = InferenceSession(custom_op_graph(), registry)
        x = Tensor(rng.normal(size=(16, 2, 2)), FLOAT32)
        assert session.run({"X": x})["Y"] == session.run({"X": x})["Y"]

    def test_concurrent_sessions_share_model(self, rng):
        session = InferenceSession(custom_op_graph(), create_registry())
        x = Tensor(rng.normal(size=(32, 2, 2)), FLOAT32)
        expected = session.run({"X": x})["Y"]
        results = []

        def worker():
            results.append(session.run({"X": x}, ExecutionMode.SERIALIZED)["Y"])

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 4
        for result in results:
            assert_allclose(result.numpy(), expected.numpy(), rtol=0, atol=1e-6)
