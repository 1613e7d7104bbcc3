"""
领域异常

库层面的失败都抛出 ForgeError 的子类，命令行统一映射为退出码 2。
"""
from typing import Optional


class ForgeError(ValueError):
    """数据与校验错误的基类"""


class AnnotationParseError(ForgeError):
    """standoff 记录无法解析"""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"第 {line_no} 行: {message}"
        super().__init__(message)


class SpanRangeError(ForgeError):
    """字符或 token 区间超出样本范围"""


class SchemaError(ForgeError):
    """事件不符合配置的事件 schema"""


class EmbeddingFormatError(ForgeError):
    """词向量文件格式错误"""


class DimensionMismatchError(ForgeError):
    """向量或张量形状不兼容"""


class UndefinedKappaError(ForgeError):
    """没有可用于计算 kappa 的句子"""


class NonFiniteError(ForgeError):
    """损失、梯度或参数更新出现 NaN / inf"""


class MissingInputError(ForgeError):
    """缺少所需的向量、概率分布、标签或样本"""


class TrainingDataError(ForgeError):
    """训练数据为空或无法编码"""
