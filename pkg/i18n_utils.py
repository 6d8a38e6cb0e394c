#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
国际化工具类
命令行消息的多语言支持；语言由 --locale、BENJAMIN_LOCALE 或 LANG 决定
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

I18N_DIR = Path(__file__).resolve().parent / "i18n"


class I18nManager:
    """国际化管理器"""

    def __init__(self, i18n_dir: Path = I18N_DIR, default_locale: str = "zh_CN"):
        self.i18n_dir = Path(i18n_dir)
        self.default_locale = default_locale
        self.translations: Dict[str, Dict[str, Any]] = {}
        self.supported_locales = []
        self._locale: Optional[str] = None
        self.load_translations()

    def load_translations(self):
        """加载所有翻译文件"""
        if not self.i18n_dir.exists():
            logger.warning(f"i18n 目录不存在: {self.i18n_dir}")
            return
        for file_path in sorted(self.i18n_dir.glob("*.json")):
            locale = file_path.stem
            try:
                with open(file_path, 'r', encoding='utf-8', errors='replace') as f:
                    self.translations[locale] = json.load(f)
                self.supported_locales.append(locale)
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"加载 {locale} 翻译失败: {e}")

    def _match(self, name: Optional[str]) -> Optional[str]:
        if not name:
            return None
        # 'zh-CN.UTF-8' -> 'zh_CN'
        locale = name.split('.')[0].replace('-', '_')
        if locale in self.supported_locales:
            return locale
        prefix = locale.split('_')[0]
        for supported in self.supported_locales:
            if supported.startswith(prefix):
                return supported
        return None

    def get_current_locale(self) -> str:
        """显式设置 > BENJAMIN_LOCALE > LANG > 默认"""
        if self._locale:
            return self._locale
        for candidate in (os.environ.get('BENJAMIN_LOCALE'), os.environ.get('LANG')):
            matched = self._match(candidate)
            if matched:
                return matched
        return self.default_locale

    def set_locale(self, locale: Optional[str]) -> bool:
        if locale is None:
            self._locale = None
            return True
        matched = self._match(locale)
        if matched:
            self._locale = matched
            return True
        logger.warning(f"不支持的语言: {locale}")
        return False

    def get_translation(self, key: str, locale: Optional[str] = None, **kwargs) -> str:
        """获取翻译文本；支持嵌套 key，如 'run.done'"""
        if locale is None:
            locale = self.get_current_locale()
        if locale not in self.translations:
            locale = self.default_locale
        if locale not in self.translations:
            return key

        node: Any = self.translations[locale]
        try:
            for k in key.split('.'):
                node = node[k]
            if isinstance(node, str) and kwargs:
                return node.format(**kwargs)
            return str(node)
        except (KeyError, TypeError):
            if locale != self.default_locale:
                return self.get_translation(key, self.default_locale, **kwargs)
            return key


# 全局实例
i18n = I18nManager()


def t(key: str, **kwargs) -> str:
    """翻译函数的简写形式"""
    return i18n.get_translation(key, **kwargs)


def get_locale() -> str:
    return i18n.get_current_locale()


def set_locale(locale: Optional[str]) -> bool:
    return i18n.set_locale(locale)
