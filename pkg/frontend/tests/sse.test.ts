import { describe, expect, it } from 'vitest';

import { SseParser } from '../src/sse.js';

describe('SseParser', () => {
  it('parses a complete event with id and data', () => {
    const parser = new SseParser();
    const events = parser.feed('id: 7\ndata: {"seq": 7}\n\n');
    expect(events).toEqual([{ id: 7, data: '{"seq": 7}' }]);
  });

  it('handles events split across arbitrary chunk boundaries', () => {
    const parser = new SseParser();
    const wire = 'id: 1\ndata: {"a": 1}\n\nid: 2\ndata: {"a": 2}\n\n';
    const events = [];
    for (const chunk of wire.match(/.{1,5}/gs) ?? []) {
      events.push(...parser.feed(chunk));
    }
    expect(events.map((e) => e.id)).toEqual([1, 2]);
    expect(JSON.parse(events[1]!.data)).toEqual({ a: 2 });
  });

  it('ignores keepalive comments', () => {
    const parser = new SseParser();
    expect(parser.feed(': keepalive\n\n')).toEqual([]);
    expect(parser.feed('data: x\n\n')).toEqual([{ id: null, data: 'x' }]);
  });

  it('joins multi-line data fields', () => {
    const parser = new SseParser();
    const events = parser.feed('data: line1\ndata: line2\n\n');
    expect(events[0]?.data).toBe('line1\nline2');
  });

  it('tolerates CRLF line endings', () => {
    const parser = new SseParser();
    const events = parser.feed('id: 3\r\ndata: y\r\n\r\n');
    expect(events).toEqual([{ id: 3, data: 'y' }]);
  });
});
